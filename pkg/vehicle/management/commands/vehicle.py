from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from core.channels import Channel, HttpTransport
from core.clock import ManualClock, SystemClock
from core.credentials import Role, TrustStore
from core.encoding import decode_tagged
from core.exceptions import VpkiError
from core.policy import load_policy
from directory.client import DirectoryClient
from vehicle.client import VehicleClient
from vehicle.walkthrough import load_walkthrough, run_walkthrough


class Command(BaseCommand):
    help = 'Cliente embarcado de demonstração: executa um roteiro de passos contra os servidores.'

    def add_arguments(self, parser):
        parser.add_argument('--home', required=True, help='CaId da LTCA de origem.')
        parser.add_argument('--directory', required=True, help='Endereço HTTP do diretório.')
        parser.add_argument('--trust', required=True, help='Arquivo do trust store.')
        parser.add_argument('--policy', help='JSON da política do domínio de origem.')
        parser.add_argument('--manual-clock', type=int, help='Usa um relógio manual começando neste instante.')
        actions = parser.add_subparsers(dest='action', required=True)
        run = actions.add_parser('run-scenario', help='Executa um roteiro JSON.')
        run.add_argument('scenario')

    def handle(self, *args, **options):
        try:
            trust = decode_tagged(Path(options['trust']).read_bytes(), TrustStore)
            directory_id = next((a.ca_id for a in trust.by_role(Role.DIRECTORY)), None)
            if directory_id is None:
                raise CommandError("trust store sem diretório")
            clock = SystemClock() if options['manual_clock'] is None else ManualClock(options['manual_clock'])
            transport = HttpTransport({directory_id: options['directory']})
            directory = DirectoryClient(Channel(transport, directory_id, trust.key_of(directory_id), clock))
            domains = {a.domain for a in trust.anchors if a.domain}
            for domain in sorted(domains):
                for entry in directory.list_by_domain(domain):
                    if entry.address:
                        transport.addresses[entry.ca_id] = entry.address
            policy = load_policy(options['policy']) if options['policy'] else None
            walkthrough = load_walkthrough(options['scenario'])
            client = VehicleClient(
                walkthrough.subject_id, options['home'], transport, trust, clock,
                policy=policy, directory=directory,
            )
        except (VpkiError, OSError) as exc:
            raise CommandError(str(exc)) from exc
        failures = run_walkthrough(client, walkthrough, out=self.stdout.write)
        if failures:
            raise CommandError(f"{failures} passo(s) falharam")
        self.stdout.write(self.style.SUCCESS('Roteiro concluído.'))
