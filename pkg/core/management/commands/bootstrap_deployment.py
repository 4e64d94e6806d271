import time
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError
from pydantic import ValidationError

from core import crypto
from core.encoding import encode_tagged
from core.policy import DomainPolicy, dump_policy
from core.topology import Topology, build_material
from directory.manifest import build_manifest


class Command(BaseCommand):
    help = ('Gera as chaves de todas as autoridades de uma topologia, o trust store, '
            'o manifesto assinado do diretório e a política de cada domínio.')

    def add_arguments(self, parser):
        parser.add_argument('topology', help='JSON da topologia (domínios, autoridades, endereços).')
        parser.add_argument('--out', required=True, help='Diretório de saída.')
        parser.add_argument('--seed', type=int, help='Semente das chaves. Só para testes.')

    def handle(self, *args, **options):
        try:
            topology = Topology.model_validate_json(Path(options['topology']).read_text(encoding='utf-8'))
        except (OSError, ValidationError) as exc:
            raise CommandError(f"topologia inválida: {exc}") from exc
        if options['seed'] is not None:
            self.stdout.write(self.style.WARNING('Chaves derivadas de semente: não use em produção.'))

        out = Path(options['out'])
        keys_dir = out / 'keys'
        keys_dir.mkdir(parents=True, exist_ok=True)
        material = build_material(topology, seed=options['seed'])
        for ca_id, keypair in material.keys.items():
            path = keys_dir / f"{ca_id}.pem"
            path.write_bytes(crypto.dump_private_key(keypair))
            path.chmod(0o600)
        self.stdout.write(self.style.SUCCESS(f'{len(material.keys)} chaves gravadas em {keys_dir}.'))

        (out / 'truststore.bin').write_bytes(encode_tagged(material.trust))
        manifest = build_manifest(
            topology, material.trust, material.keys[topology.directory.id], issued_at=int(time.time())
        )
        (out / 'manifest.bin').write_bytes(encode_tagged(manifest))
        for domain in topology.domains:
            dump_policy(domain.policy or DomainPolicy(), out / f"policy-{domain.name}.json")
        self.stdout.write(self.style.SUCCESS(f'Trust store, manifesto e políticas gravados em {out}.'))
