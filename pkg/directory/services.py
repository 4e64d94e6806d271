import logging
from pathlib import Path

from core import crypto
from core.credentials import Role
from core.encoding import decode_tagged
from core.exceptions import BadSignature, NotFound

from .manifest import DirectoryEntry, DirectoryManifest, manifest_valid

logger = logging.getLogger(__name__)


class Directory:
    """Conteúdo do diretório, carregado uma vez do manifesto e só lido depois."""

    def __init__(self, manifest: DirectoryManifest, directory_key: crypto.PublicKey):
        if not manifest_valid(manifest, directory_key):
            raise BadSignature("manifesto do diretório com assinatura inválida")
        self.manifest = manifest
        self._by_id = {e.ca_id: e for e in manifest.entries}

    @classmethod
    def from_file(cls, path, directory_key: crypto.PublicKey) -> "Directory":
        manifest = decode_tagged(Path(path).read_bytes(), DirectoryManifest)
        directory = cls(manifest, directory_key)
        logger.info("diretório carregado de %s com %d entradas", path, len(manifest.entries))
        return directory

    def lookup(self, ca_id: str) -> DirectoryEntry:
        entry = self._by_id.get(ca_id)
        if entry is None:
            raise NotFound(f"{ca_id} não está no diretório")
        return entry

    def list_by_domain(self, domain: str, role: Role | None = None) -> list[DirectoryEntry]:
        return [
            e for e in self.manifest.entries
            if e.domain == domain and (role is None or e.role == role)
        ]
