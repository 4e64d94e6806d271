"""Corpos das mensagens atendidas pela PCA."""
import enum
from dataclasses import dataclass

from core.credentials import CA_ID, INTERVAL, RND, Csr, Interval, Pseudonym, RevocationList, Ticket
from core.encoding import BYTES, U16, U64, Canonical, EnumCodec, Maybe, Seq, Str, Struct


@dataclass(frozen=True)
class PseudonymRequest(Canonical):
    rnd: bytes
    interval: Interval
    ticket: Ticket
    csrs: tuple[Csr, ...]

    __layout__ = (
        ("rnd", RND),
        ("interval", INTERVAL),
        ("ticket", Struct(Ticket)),
        ("csrs", Seq(Struct(Csr))),
    )

    def __post_init__(self):
        object.__setattr__(self, "csrs", tuple(self.csrs))


@dataclass(frozen=True)
class PseudonymItem(Canonical):
    """Resultado de um CSR: o pseudônimo ou o código do erro (0 = sucesso)."""

    pseudonym: Pseudonym | None
    error_code: int = 0
    error_message: str = ""

    __layout__ = (
        ("pseudonym", Maybe(Struct(Pseudonym))),
        ("error_code", U16),
        ("error_message", Str()),
    )


@dataclass(frozen=True)
class PseudonymResponse(Canonical):
    items: tuple[PseudonymItem, ...]

    __layout__ = (("items", Seq(Struct(PseudonymItem))),)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class CrlRequest(Canonical):
    since_sequence: int | None = None

    __layout__ = (("since_sequence", Maybe(U64)),)


@dataclass(frozen=True)
class CrlResponse(Canonical):
    crl: RevocationList

    __layout__ = (("crl", Struct(RevocationList)),)


class CertStatus(enum.IntEnum):
    GOOD = 0
    REVOKED = 1
    UNKNOWN = 2


@dataclass(frozen=True)
class OcspChallenge(Canonical):
    """O que o veículo assina com o pseudônimo corrente para se autenticar no OCSP."""

    query_serial: int
    nonce: int
    timestamp: int

    __layout__ = (("query_serial", U64), ("nonce", U64), ("timestamp", U64))


@dataclass(frozen=True)
class OcspRequest(Canonical):
    query_serial: int
    requester: Pseudonym
    proof: bytes

    __layout__ = (
        ("query_serial", U64),
        ("requester", Struct(Pseudonym)),
        ("proof", BYTES),
    )


@dataclass(frozen=True)
class OcspResponse(Canonical):
    query_serial: int
    status: CertStatus

    __layout__ = (("query_serial", U64), ("status", EnumCodec(CertStatus)))


@dataclass(frozen=True)
class MapPseudonymRequest(Canonical):
    serial: int

    __layout__ = (("serial", U64),)


@dataclass(frozen=True)
class MapPseudonymResponse(Canonical):
    ticket_issuer: str
    ticket_serial: int

    __layout__ = (("ticket_issuer", CA_ID), ("ticket_serial", U64))


@dataclass(frozen=True)
class RevokeTicketRequest(Canonical):
    ticket_issuer: str
    ticket_serial: int

    __layout__ = (("ticket_issuer", CA_ID), ("ticket_serial", U64))


@dataclass(frozen=True)
class RevokeTicketResponse(Canonical):
    count: int

    __layout__ = (("count", U64),)
