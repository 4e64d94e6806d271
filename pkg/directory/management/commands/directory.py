from core.credentials import Role
from core.management.service import ServiceCommand
from directory.endpoints import DirectoryEndpoint
from directory.services import Directory


class Command(ServiceCommand):
    help = 'Sobe o diretório a partir do manifesto assinado.'
    role = Role.DIRECTORY
    endpoint_class = DirectoryEndpoint
    needs_policy = False
    needs_state = False
    default_id = 'directory'

    def add_service_arguments(self, parser):
        super().add_service_arguments(parser)
        parser.add_argument('--manifest', required=True, help='Manifesto assinado gerado pelo bootstrap.')

    def build_endpoint(self, authority, options):
        directory = Directory.from_file(options['manifest'], authority.public_key)
        return DirectoryEndpoint(authority, directory)
