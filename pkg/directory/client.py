from core.channels import Channel
from core.credentials import Role
from core.exceptions import ResponseInvalid
from core.wire import MsgType

from .manifest import DirectoryEntry, entry_valid
from .messages import DirectoryQuery, DirectoryResult


class DirectoryClient:
    """Consulta o diretório e recusa qualquer entrada sem a assinatura dele."""

    def __init__(self, channel: Channel):
        self.channel = channel

    def _query(self, query: DirectoryQuery) -> tuple[DirectoryEntry, ...]:
        result = self.channel.call(MsgType.DIR_REQ, query, DirectoryResult)
        for entry in result.entries:
            if not entry_valid(entry, self.channel.server_key):
                raise ResponseInvalid(f"entrada de {entry.ca_id} sem assinatura válida do diretório")
        return result.entries

    def lookup(self, ca_id: str) -> DirectoryEntry:
        entries = self._query(DirectoryQuery(ca_id=ca_id))
        if len(entries) != 1 or entries[0].ca_id != ca_id:
            raise ResponseInvalid(f"diretório devolveu outra coisa para {ca_id}")
        return entries[0]

    def list_by_domain(self, domain: str, role: Role | None = None) -> list[DirectoryEntry]:
        entries = self._query(DirectoryQuery(domain=domain, role=role))
        if any(e.domain != domain or (role is not None and e.role != role) for e in entries):
            raise ResponseInvalid("diretório devolveu entradas fora do filtro")
        return list(entries)
