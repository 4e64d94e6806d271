"""Corpos das mensagens atendidas pela LTCA."""
from dataclasses import dataclass

from core.credentials import CA_ID, DIGEST, INTERVAL, RND, Csr, Interval, LongTermCertificate, Ticket
from core.encoding import U64, Canonical, Maybe, Str, Struct


@dataclass(frozen=True)
class TicketRequest(Canonical):
    """H(destino || Rnd), [t_s, t_e) e o LTC do veículo. Serve ticket nativo e estrangeiro."""

    target_digest: bytes
    interval: Interval
    ltc: LongTermCertificate

    __layout__ = (
        ("target_digest", DIGEST),
        ("interval", INTERVAL),
        ("ltc", Struct(LongTermCertificate)),
    )


@dataclass(frozen=True)
class TicketResponse(Canonical):
    ticket: Ticket

    __layout__ = (("ticket", Struct(Ticket)),)


@dataclass(frozen=True)
class ForeignTicketRequest(Canonical):
    f_ticket: Ticket
    rnd: bytes
    target_digest: bytes
    interval: Interval

    __layout__ = (
        ("f_ticket", Struct(Ticket)),
        ("rnd", RND),
        ("target_digest", DIGEST),
        ("interval", INTERVAL),
    )


@dataclass(frozen=True)
class ResolveTicketRequest(Canonical):
    ticket_serial: int

    __layout__ = (("ticket_serial", U64),)


@dataclass(frozen=True)
class ResolveTicketResponse(Canonical):
    """Ou `subject_id`, ou o ponteiro (LTCA de origem, serial do f-tkt)."""

    subject_id: str | None = None
    home_issuer: str | None = None
    foreign_serial: int | None = None

    __layout__ = (
        ("subject_id", Maybe(Str(nonempty=True))),
        ("home_issuer", Maybe(CA_ID)),
        ("foreign_serial", Maybe(U64)),
    )


@dataclass(frozen=True)
class RevokeLtcRequest(Canonical):
    subject_id: str

    __layout__ = (("subject_id", Str(nonempty=True)),)


@dataclass(frozen=True)
class RevokeResponse(Canonical):
    count: int

    __layout__ = (("count", U64),)


@dataclass(frozen=True)
class RegisterRequest(Canonical):
    subject_id: str
    csr: Csr
    validity: Interval

    __layout__ = (
        ("subject_id", Str(nonempty=True)),
        ("csr", Struct(Csr)),
        ("validity", INTERVAL),
    )


@dataclass(frozen=True)
class UpdateLtcRequest(Canonical):
    old_ltc: LongTermCertificate
    csr: Csr

    __layout__ = (("old_ltc", Struct(LongTermCertificate)), ("csr", Struct(Csr)))


@dataclass(frozen=True)
class LtcResponse(Canonical):
    ltc: LongTermCertificate

    __layout__ = (("ltc", Struct(LongTermCertificate)),)
