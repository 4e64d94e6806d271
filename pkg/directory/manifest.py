"""
Manifesto do diretório: a lista assinada de autoridades da implantação.

Cada entrada traz o certificado (âncora) da autoridade, o domínio, o
endereço do binding HTTP e as associações LTCA <-> PCA do domínio. Entradas
e manifesto são assinados pela chave do diretório.
"""
from dataclasses import dataclass

from core import crypto
from core.credentials import CA_ID, Role, TrustAnchor, sign_credential, signature_valid
from core.encoding import (
    BYTES,
    U64,
    Canonical,
    EnumCodec,
    Seq,
    Str,
    Struct,
    canonical_decode,
    canonical_encode,
    register_tag,
)


@dataclass(frozen=True)
class DirectoryEntry(Canonical):
    ca_id: str
    role: Role
    certificate: bytes
    domain: str = ""
    associations: tuple[str, ...] = ()
    address: str = ""
    signature: crypto.Signature = b""

    __layout__ = (
        ("ca_id", CA_ID),
        ("role", EnumCodec(Role)),
        ("certificate", BYTES),
        ("domain", Str()),
        ("associations", Seq(CA_ID)),
        ("address", Str()),
        ("signature", BYTES),
    )

    def __post_init__(self):
        object.__setattr__(self, "associations", tuple(self.associations))

    @property
    def anchor(self) -> TrustAnchor:
        return canonical_decode(self.certificate, TrustAnchor)

    @property
    def public_key(self) -> crypto.PublicKey:
        return self.anchor.public_key


@register_tag
@dataclass(frozen=True)
class DirectoryManifest(Canonical):
    issuer: str
    issued_at: int
    entries: tuple[DirectoryEntry, ...]
    signature: crypto.Signature = b""

    __tag__ = b"DIR1"
    __layout__ = (
        ("issuer", CA_ID),
        ("issued_at", U64),
        ("entries", Seq(Struct(DirectoryEntry))),
        ("signature", BYTES),
    )

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: e.ca_id))
        object.__setattr__(self, "entries", entries)
        known = set()
        for entry in entries:
            if entry.ca_id in known:
                raise ValueError(f"CaId repetido no manifesto: {entry.ca_id}")
            known.add(entry.ca_id)
        for entry in entries:
            missing = set(entry.associations) - known
            if missing:
                raise ValueError(f"{entry.ca_id} associado a entradas desconhecidas: {sorted(missing)}")

    def addresses(self) -> dict[str, str]:
        return {e.ca_id: e.address for e in self.entries if e.address}


def _associations(topology, role: Role, domain: str) -> tuple[str, ...]:
    if role in (Role.RCA, Role.DIRECTORY):
        return ()
    d = topology.domain(domain)
    pcas = tuple(p.id for p in d.pcas)
    if role == Role.LTCA:
        return pcas
    if role == Role.PCA:
        return (d.ltca.id,)
    return (d.ltca.id,) + pcas


def build_manifest(topology, trust, directory_keypair: crypto.KeyPair, issued_at: int) -> DirectoryManifest:
    entries = []
    for spec, role, domain in topology.authorities():
        anchor = trust.get(spec.id)
        entry = DirectoryEntry(
            ca_id=spec.id,
            role=role,
            certificate=canonical_encode(anchor),
            domain=domain,
            associations=_associations(topology, role, domain),
            address=spec.address,
        )
        entries.append(sign_credential(entry, directory_keypair))
    manifest = DirectoryManifest(topology.directory.id, issued_at, tuple(entries))
    return sign_credential(manifest, directory_keypair)


def entry_valid(entry: DirectoryEntry, directory_key: crypto.PublicKey) -> bool:
    return signature_valid(entry, directory_key)


def manifest_valid(manifest: DirectoryManifest, directory_key: crypto.PublicKey) -> bool:
    return signature_valid(manifest, directory_key) and all(
        entry_valid(e, directory_key) for e in manifest.entries
    )
