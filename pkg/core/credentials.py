"""
Modelo de credenciais: LTC, ticket, pseudônimo, CSR, CRL e trust store.

Os tipos são imutáveis. A assinatura de cada credencial cobre a codificação
canônica de todos os campos que a precedem (`tbs_bytes`).
"""
import enum
from dataclasses import dataclass, replace
from types import MappingProxyType

from . import crypto
from .encoding import (
    BOOL,
    BYTES,
    U64,
    Bytes,
    Canonical,
    EnumCodec,
    Maybe,
    Seq,
    Str,
    Struct,
    register_tag,
    tbs_bytes,
)

CaId = str
SerialNumber = int
TimePoint = int

CA_ID = Str(max_bytes=64, nonempty=True)
DIGEST = Bytes(crypto.DIGEST_SIZE)
RND = Bytes(crypto.RND_SIZE)


class Role(enum.IntEnum):
    RCA = 1
    LTCA = 2
    PCA = 3
    RA = 4
    DIRECTORY = 5


class ValidationResult(enum.Enum):
    VALID = "valid"
    EXPIRED = "expired"
    NOT_YET_VALID = "not_yet_valid"
    UNKNOWN_ISSUER = "unknown_issuer"
    BAD_SIGNATURE = "bad_signature"


@dataclass(frozen=True, order=True)
class Interval(Canonical):
    start: TimePoint
    end: TimePoint

    __layout__ = (("start", U64), ("end", U64))

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"intervalo vazio ou invertido [{self.start}, {self.end}]")

    @property
    def length(self) -> int:
        return self.end - self.start

    def covers(self, now: TimePoint) -> bool:
        """Intervalos são semiabertos: [start, end)."""
        return self.start <= now < self.end

    def overlaps(self, other: "Interval") -> bool:
        return self.start < other.end and other.start < self.end

    def within(self, other: "Interval") -> bool:
        return other.start <= self.start and self.end <= other.end

    def snap_outward(self, step: int, epoch: TimePoint = 0) -> "Interval":
        """[⌊start/step⌋·step, ⌈end/step⌉·step], relativo a `epoch`."""
        lo = epoch + ((self.start - epoch) // step) * step
        hi = epoch + -((epoch - self.end) // step) * step
        return Interval(lo, hi)


INTERVAL = Struct(Interval)


@register_tag
@dataclass(frozen=True)
class LongTermCertificate(Canonical):
    serial: SerialNumber
    subject_id: str
    public_key: crypto.PublicKey
    validity: Interval
    issuer: CaId
    signature: crypto.Signature = b""

    __tag__ = b"LTC1"
    __layout__ = (
        ("serial", U64),
        ("subject_id", Str(nonempty=True)),
        ("public_key", BYTES),
        ("validity", INTERVAL),
        ("issuer", CA_ID),
        ("signature", BYTES),
    )


@register_tag
@dataclass(frozen=True)
class Ticket(Canonical):
    serial: SerialNumber
    target_digest: crypto.Digest256
    interval: Interval
    tkt_expiry: TimePoint
    issuer: CaId
    signature: crypto.Signature = b""

    __tag__ = b"TKT1"
    __layout__ = (
        ("serial", U64),
        ("target_digest", DIGEST),
        ("interval", INTERVAL),
        ("tkt_expiry", U64),
        ("issuer", CA_ID),
        ("signature", BYTES),
    )

    def __post_init__(self):
        if self.tkt_expiry < self.interval.end:
            raise ValueError("tkt_expiry anterior ao fim do intervalo")


@register_tag
@dataclass(frozen=True)
class Pseudonym(Canonical):
    serial: SerialNumber
    public_key: crypto.PublicKey
    interval: Interval
    issuer: CaId
    signature: crypto.Signature = b""

    __tag__ = b"PSN1"
    __layout__ = (
        ("serial", U64),
        ("public_key", BYTES),
        ("interval", INTERVAL),
        ("issuer", CA_ID),
        ("signature", BYTES),
    )


@register_tag
@dataclass(frozen=True)
class Csr(Canonical):
    public_key: crypto.PublicKey
    pop_signature: crypto.Signature

    __tag__ = b"CSR1"
    __layout__ = (("public_key", BYTES), ("pop_signature", BYTES))


@register_tag
@dataclass(frozen=True)
class RevocationList(Canonical):
    issuer: CaId
    sequence: int
    issued_at: TimePoint
    entries: tuple[SerialNumber, ...]
    delta: bool = False
    since_sequence: int = 0
    signature: crypto.Signature = b""

    __tag__ = b"CRL1"
    __layout__ = (
        ("issuer", CA_ID),
        ("sequence", U64),
        ("issued_at", U64),
        ("entries", Seq(U64)),
        ("delta", BOOL),
        ("since_sequence", U64),
        ("signature", BYTES),
    )

    def __post_init__(self):
        entries = tuple(self.entries)
        if any(a >= b for a, b in zip(entries, entries[1:])):
            raise ValueError("entradas da CRL precisam ser crescentes e sem repetição")
        object.__setattr__(self, "entries", entries)


@dataclass(frozen=True)
class TrustAnchor(Canonical):
    ca_id: CaId
    public_key: crypto.PublicKey
    role: Role
    parent: CaId | None = None
    domain: str = ""

    __layout__ = (
        ("ca_id", CA_ID),
        ("public_key", BYTES),
        ("role", EnumCodec(Role)),
        ("parent", Maybe(CA_ID)),
        ("domain", Str()),
    )


@register_tag
@dataclass(frozen=True)
class TrustStore(Canonical):
    """
    Mapa CaId -> (chave, papel, pai). Toda entrada que não é RCA precisa de
    uma cadeia de pais terminando em uma RCA. Atualizações devolvem uma cópia.
    """

    anchors: tuple[TrustAnchor, ...]

    __tag__ = b"TRS1"
    __layout__ = (("anchors", Seq(Struct(TrustAnchor))),)

    def __post_init__(self):
        anchors = tuple(sorted(self.anchors, key=lambda a: a.ca_id))
        object.__setattr__(self, "anchors", anchors)
        by_id = {}
        for anchor in anchors:
            if anchor.ca_id in by_id:
                raise ValueError(f"CaId repetido no trust store: {anchor.ca_id}")
            by_id[anchor.ca_id] = anchor
        object.__setattr__(self, "_by_id", MappingProxyType(by_id))
        for anchor in anchors:
            self._check_chain(anchor)

    def _check_chain(self, anchor: TrustAnchor) -> None:
        seen = set()
        current = anchor
        while current.role != Role.RCA:
            if current.parent is None or current.parent not in self._by_id:
                raise ValueError(f"{anchor.ca_id} não encadeia até uma RCA")
            if current.ca_id in seen:
                raise ValueError(f"ciclo na cadeia de {anchor.ca_id}")
            seen.add(current.ca_id)
            current = self._by_id[current.parent]

    def get(self, ca_id: CaId) -> TrustAnchor | None:
        return self._by_id.get(ca_id)

    def key_of(self, ca_id: CaId) -> crypto.PublicKey | None:
        anchor = self._by_id.get(ca_id)
        return anchor.public_key if anchor else None

    def has_role(self, ca_id: CaId, role: Role) -> bool:
        anchor = self._by_id.get(ca_id)
        return anchor is not None and anchor.role == role

    def by_role(self, role: Role) -> tuple[TrustAnchor, ...]:
        return tuple(a for a in self.anchors if a.role == role)

    def is_ra_key(self, public_key: crypto.PublicKey | None) -> bool:
        return public_key is not None and any(a.public_key == public_key for a in self.by_role(Role.RA))

    def with_anchor(self, anchor: TrustAnchor) -> "TrustStore":
        others = tuple(a for a in self.anchors if a.ca_id != anchor.ca_id)
        return TrustStore(others + (anchor,))


_ISSUER_ROLE = {
    LongTermCertificate: Role.LTCA,
    Ticket: Role.LTCA,
    Pseudonym: Role.PCA,
}


def sign_credential(unsigned, keypair: crypto.KeyPair):
    return replace(unsigned, signature=keypair.sign(tbs_bytes(unsigned)))


def signature_valid(cert, public_key: crypto.PublicKey) -> bool:
    return crypto.verify(public_key, tbs_bytes(cert), cert.signature)


def validate_chain(cert, trust: TrustStore, now: TimePoint) -> ValidationResult:
    expected = _ISSUER_ROLE.get(type(cert))
    anchor = trust.get(cert.issuer)
    if expected is None or anchor is None or anchor.role != expected:
        return ValidationResult.UNKNOWN_ISSUER
    if not signature_valid(cert, anchor.public_key):
        return ValidationResult.BAD_SIGNATURE
    validity = cert.validity if isinstance(cert, LongTermCertificate) else cert.interval
    if now < validity.start:
        return ValidationResult.NOT_YET_VALID
    if now >= validity.end:
        return ValidationResult.EXPIRED
    if isinstance(cert, Ticket) and now > cert.tkt_expiry:
        return ValidationResult.EXPIRED
    return ValidationResult.VALID


def csr_tbs(csr: Csr) -> bytes:
    """Bytes da prova de posse: a codificação canônica da chave pública (com prefixo de tamanho)."""
    return tbs_bytes(csr, exclude="pop_signature")


def make_csr(kp: crypto.KeyPair) -> Csr:
    unsigned = Csr(public_key=kp.public, pop_signature=b"")
    return replace(unsigned, pop_signature=kp.sign(csr_tbs(unsigned)))


def verify_pop(csr: Csr) -> bool:
    return crypto.verify(csr.public_key, csr_tbs(csr), csr.pop_signature)
