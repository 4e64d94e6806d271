from core.credentials import Role
from core.management.service import ServiceCommand
from ltca.endpoints import LtcaEndpoint


class Command(ServiceCommand):
    help = 'Sobe uma LTCA: registro de veículos, LTCs e emissão de tickets.'
    role = Role.LTCA
    endpoint_class = LtcaEndpoint
