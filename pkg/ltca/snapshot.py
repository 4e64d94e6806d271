"""
Snapshot do estado persistente da LTCA.

Contém exatamente as tabelas que a LTCA guarda, nada além: é o que uma LTCA
honesta-mas-curiosa teria em mãos para tentar ligar identidades.
"""
from dataclasses import dataclass

from core.credentials import CA_ID, DIGEST, INTERVAL, Interval
from core.encoding import U64, Canonical, Seq, Str, Struct, register_tag

from .models import ForeignTicketExchange, TicketLedgerEntry, VehicleRecord


@dataclass(frozen=True)
class LedgerRow(Canonical):
    ticket_serial: int
    subject_id: str
    interval: Interval
    target_digest: bytes
    issued_at: int

    __layout__ = (
        ("ticket_serial", U64),
        ("subject_id", Str()),
        ("interval", INTERVAL),
        ("target_digest", DIGEST),
        ("issued_at", U64),
    )


@dataclass(frozen=True)
class ExchangeRow(Canonical):
    ticket_serial: int
    ftkt_issuer: str
    ftkt_serial: int
    interval: Interval
    target_digest: bytes

    __layout__ = (
        ("ticket_serial", U64),
        ("ftkt_issuer", CA_ID),
        ("ftkt_serial", U64),
        ("interval", INTERVAL),
        ("target_digest", DIGEST),
    )


@register_tag
@dataclass(frozen=True)
class LtcaSnapshot(Canonical):
    ca_id: str
    domain: str
    subjects: tuple[str, ...]
    tickets: tuple[LedgerRow, ...]
    exchanges: tuple[ExchangeRow, ...]

    __tag__ = b"SNL1"
    __layout__ = (
        ("ca_id", CA_ID),
        ("domain", Str()),
        ("subjects", Seq(Str())),
        ("tickets", Seq(Struct(LedgerRow))),
        ("exchanges", Seq(Struct(ExchangeRow))),
    )

    def __post_init__(self):
        for name in ("subjects", "tickets", "exchanges"):
            object.__setattr__(self, name, tuple(getattr(self, name)))


def export_snapshot(ltca) -> LtcaSnapshot:
    subjects = VehicleRecord.objects.filter(authority=ltca.ca_id).values_list('subject_id', flat=True)
    tickets = [
        LedgerRow(e.ticket_serial, e.vehicle.subject_id, Interval(e.interval_start, e.interval_end),
                  bytes(e.target_digest), e.issued_at)
        for e in TicketLedgerEntry.objects.filter(authority=ltca.ca_id).select_related('vehicle')
    ]
    exchanges = [
        ExchangeRow(x.ticket_serial, x.ftkt_issuer, x.ftkt_serial, Interval(x.interval_start, x.interval_end),
                    bytes(x.target_digest))
        for x in ForeignTicketExchange.objects.filter(authority=ltca.ca_id)
    ]
    return LtcaSnapshot(ltca.ca_id, ltca.domain, tuple(sorted(subjects)), tuple(tickets), tuple(exchanges))
