from pathlib import Path

from django.contrib.auth.models import User
from django.core.management.base import CommandError

from core.channels import HttpTransport
from core.credentials import Role
from core.encoding import decode_tagged
from core.exceptions import ForeignUnreachable, VpkiError
from core.management.service import ServiceCommand
from directory.manifest import DirectoryManifest, manifest_valid
from ra import services
from ra.endpoints import RaEndpoint
from ra.messages import ResolutionRequest


class Command(ServiceCommand):
    help = 'RA: sobe o serviço (serve), resolve um pseudônimo (resolve) ou lê a auditoria (audit).'
    role = Role.RA

    def add_arguments(self, parser):
        actions = parser.add_subparsers(dest='action', required=True)
        serve = actions.add_parser('serve', help='Sobe a RA no binding HTTP.')
        self.add_service_arguments(serve)
        serve.add_argument('--manifest', required=True, help='Manifesto do diretório (endereços dos servidores).')

        resolve = actions.add_parser('resolve', help='Resolve um pseudônimo até o veículo.')
        self._local_arguments(resolve)
        resolve.add_argument('--manifest', required=True)
        resolve.add_argument('--pseudonym', required=True, help='<PCA emissora>:<serial>')
        resolve.add_argument('--justification', required=True)
        resolve.add_argument('--revoke', action='store_true', help='Revoga os pseudônimos válidos do ticket.')
        resolve.add_argument('--revoke-ltc', action='store_true', help='Revoga o LTC do veículo.')

        audit = actions.add_parser('audit', help='Lista o log de auditoria.')
        self._local_arguments(audit)
        audit.add_argument('--since', type=int, default=0)

    def _local_arguments(self, parser):
        parser.add_argument('--id', required=True, dest='ca_id')
        parser.add_argument('--state', required=True)
        parser.add_argument('--trust', required=True)
        parser.add_argument('--key')
        parser.add_argument('--policy')
        parser.add_argument('--operator', required=True, help='Usuário Django do operador.')

    def _transport(self, authority, options):
        manifest = decode_tagged(Path(options['manifest']).read_bytes(), DirectoryManifest)
        directory_key = authority.trust.key_of(manifest.issuer)
        if directory_key is None or not manifest_valid(manifest, directory_key):
            raise CommandError("manifesto do diretório com assinatura inválida")
        return HttpTransport(manifest.addresses())

    def build_endpoint(self, authority, options):
        return RaEndpoint(authority, self._transport(authority, options))

    def handle(self, *args, **options):
        if options['action'] == 'serve':
            return super().handle(*args, **options)
        try:
            authority = self.load(options)
            operator = User.objects.filter(username=options['operator']).first()
            if options['action'] == 'resolve':
                self._resolve(authority, operator, options)
            else:
                self._audit(authority, operator, options)
        except PermissionError as exc:
            raise CommandError(str(exc)) from exc
        except ForeignUnreachable as exc:
            raise CommandError(
                f"resolução parcial: origem {exc.home_issuer}, f-tkt {exc.foreign_serial} ({exc})"
            ) from exc
        except (VpkiError, ValueError, OSError) as exc:
            raise CommandError(str(exc)) from exc

    def _resolve(self, authority, operator, options):
        issuer, sep, serial = options['pseudonym'].rpartition(':')
        if not sep or not serial.isdigit():
            raise ValueError("--pseudonym precisa ser <PCA>:<serial>")
        request = ResolutionRequest(
            issuer, int(serial), options['justification'],
            revoke_pseudonyms=options['revoke'], revoke_ltc=options['revoke_ltc'],
        )
        found = services.resolve(authority, self._transport(authority, options), request, operator)
        self.stdout.write(self.style.SUCCESS(
            f"{found.subject_id} (LTCA {found.home_ltca}); pseudônimos revogados: {found.pseudonyms_revoked}; "
            f"LTC revogado: {'sim' if found.ltc_revoked else 'não'}"
        ))

    def _audit(self, authority, operator, options):
        for entry in services.audit_log(authority, options['since'], operator):
            hops = " -> ".join(f"{s['op']}@{s['server']}" for s in entry.steps)
            self.stdout.write(f"{entry.created_at} {entry.operator} {entry.pseudonym_issuer}/"
                              f"{entry.pseudonym_serial} {entry.outcome} [{hops}] {entry.subject_id}")
