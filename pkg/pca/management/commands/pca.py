from pathlib import Path

from core.channels import HttpTransport
from core.credentials import Role
from core.encoding import decode_tagged
from core.management.service import ServiceCommand
from directory.manifest import DirectoryManifest, manifest_valid
from pca.endpoints import PcaEndpoint
from pca.peers import PeerCrls


class Command(ServiceCommand):
    help = 'Sobe uma PCA (ou uma réplica dela): pseudônimos, CRL, OCSP e passos de resolução.'
    role = Role.PCA
    endpoint_class = PcaEndpoint

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--replica-offset', type=int, default=0,
                            help='Resíduo dos seriais desta réplica.')
        parser.add_argument('--replica-stride', type=int, default=1,
                            help='Número de réplicas que dividem os seriais.')
        parser.add_argument('--manifest',
                            help='Manifesto do diretório; sem ele o OCSP recusa pseudônimos de outras PCAs.')

    def authority_options(self, options) -> dict:
        offset, stride = options['replica_offset'], options['replica_stride']
        if stride < 1 or not 0 <= offset < stride:
            raise ValueError(f"réplica inválida: offset {offset}, stride {stride}")
        return {'serial_offset': offset, 'serial_stride': stride}

    def build_endpoint(self, authority, options):
        if not options.get('manifest'):
            return PcaEndpoint(authority)
        manifest = decode_tagged(Path(options['manifest']).read_bytes(), DirectoryManifest)
        directory_key = authority.trust.key_of(manifest.issuer)
        if directory_key is None or not manifest_valid(manifest, directory_key):
            raise ValueError("manifesto do diretório com assinatura inválida")
        return PcaEndpoint(authority, PeerCrls(HttpTransport(manifest.addresses()), authority))
