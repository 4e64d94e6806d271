from dataclasses import dataclass

from core.credentials import CA_ID, Role
from core.encoding import Canonical, EnumCodec, Maybe, Seq, Str, Struct

from .manifest import DirectoryEntry


@dataclass(frozen=True)
class DirectoryQuery(Canonical):
    """Com `ca_id`: busca uma entrada. Sem ele: lista o domínio, filtrando pelo papel."""

    ca_id: str | None = None
    domain: str | None = None
    role: Role | None = None

    __layout__ = (
        ("ca_id", Maybe(CA_ID)),
        ("domain", Maybe(Str())),
        ("role", Maybe(EnumCodec(Role))),
    )


@dataclass(frozen=True)
class DirectoryResult(Canonical):
    entries: tuple[DirectoryEntry, ...]

    __layout__ = (("entries", Seq(Struct(DirectoryEntry))),)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
