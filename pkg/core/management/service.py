"""Base das linhas de comando que sobem uma autoridade no binding HTTP."""
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import VpkiError
from core.hosting import load_authority, register_endpoint, serve, use_state_file


class ServiceCommand(BaseCommand):
    role = None
    endpoint_class = None
    needs_policy = True
    needs_state = True
    default_id = None

    def add_arguments(self, parser):
        self.add_service_arguments(parser)

    def add_service_arguments(self, parser):
        parser.add_argument('--id', required=self.default_id is None, default=self.default_id, dest='ca_id',
                            help='CaId desta autoridade.')
        parser.add_argument('--listen', required=True, help='host:porta do binding HTTP.')
        parser.add_argument('--state', required=self.needs_state, help='Arquivo SQLite do estado persistente.')
        parser.add_argument('--trust', required=True, help='Arquivo do trust store.')
        parser.add_argument('--key', help='PEM da chave privada (padrão: VPKI_KEY_DIR/<id>.pem).')
        parser.add_argument('--threads', type=int, default=8)
        if self.needs_policy:
            parser.add_argument('--policy', required=True, help='JSON da política do domínio.')

    def authority_options(self, options) -> dict:
        return {}

    def build_endpoint(self, authority, options):
        return self.endpoint_class(authority)

    def load(self, options):
        authority = load_authority(
            options['ca_id'],
            self.role,
            trust_path=options['trust'],
            key_path=options.get('key'),
            policy_path=options.get('policy'),
            **self.authority_options(options),
        )
        if options.get('state'):
            use_state_file(options['state'])
        return authority

    def handle(self, *args, **options):
        try:
            authority = self.load(options)
            endpoint = self.build_endpoint(authority, options)
        except (VpkiError, ValueError, OSError) as exc:
            raise CommandError(str(exc)) from exc
        register_endpoint(endpoint)
        self.stdout.write(self.style.SUCCESS(f"{self.role.name} {authority.ca_id} pronta em {options['listen']}"))
        serve(options['listen'], threads=options['threads'])
