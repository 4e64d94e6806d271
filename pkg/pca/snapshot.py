"""Snapshot das tabelas da PCA: tickets usados, pseudônimos e revogações."""
from dataclasses import dataclass

from core.credentials import CA_ID, INTERVAL, Interval
from core.encoding import BYTES, U64, Canonical, Seq, Str, Struct, register_tag

from .models import IssuedPseudonym, RevokedPseudonym, TicketUsage


@dataclass(frozen=True)
class UsageRow(Canonical):
    ticket_issuer: str
    ticket_serial: int
    interval: Interval
    used_at: int

    __layout__ = (
        ("ticket_issuer", CA_ID),
        ("ticket_serial", U64),
        ("interval", INTERVAL),
        ("used_at", U64),
    )


@dataclass(frozen=True)
class PseudonymRow(Canonical):
    serial: int
    ticket_issuer: str
    ticket_serial: int
    interval: Interval
    public_key: bytes

    __layout__ = (
        ("serial", U64),
        ("ticket_issuer", CA_ID),
        ("ticket_serial", U64),
        ("interval", INTERVAL),
        ("public_key", BYTES),
    )


@register_tag
@dataclass(frozen=True)
class PcaSnapshot(Canonical):
    ca_id: str
    domain: str
    usages: tuple[UsageRow, ...]
    pseudonyms: tuple[PseudonymRow, ...]
    revoked: tuple[int, ...]

    __tag__ = b"SNP1"
    __layout__ = (
        ("ca_id", CA_ID),
        ("domain", Str()),
        ("usages", Seq(Struct(UsageRow))),
        ("pseudonyms", Seq(Struct(PseudonymRow))),
        ("revoked", Seq(U64)),
    )

    def __post_init__(self):
        for name in ("usages", "pseudonyms", "revoked"):
            object.__setattr__(self, name, tuple(getattr(self, name)))


def export_snapshot(pca) -> PcaSnapshot:
    usages = [
        UsageRow(u.ticket_issuer, u.ticket_serial, Interval(u.interval_start, u.interval_end), u.used_at)
        for u in TicketUsage.objects.filter(authority=pca.ca_id)
    ]
    pseudonyms = [
        PseudonymRow(p.serial, p.usage.ticket_issuer, p.usage.ticket_serial,
                     Interval(p.interval_start, p.interval_end), bytes(p.public_key))
        for p in IssuedPseudonym.objects.filter(authority=pca.ca_id).select_related('usage')
    ]
    revoked = sorted(RevokedPseudonym.objects.filter(authority=pca.ca_id).values_list('serial', flat=True))
    return PcaSnapshot(pca.ca_id, pca.domain, tuple(usages), tuple(pseudonyms), tuple(revoked))
