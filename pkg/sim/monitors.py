"""
Monitores de invariantes rodados ao fim de cada rodada do harness.

Cada monitor devolve um `MonitorResult`; qualquer violação faz o comando
sair com código diferente de zero.
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from core.credentials import Interval, Role, signature_valid
from core.exceptions import VpkiError
from pca.services import get_crl
from privacy.collusion import SnapshotSet, collusion_closure
from ra.messages import ResolutionRequest
from ra.services import resolve

logger = logging.getLogger(__name__)


@dataclass
class MonitorResult:
    name: str
    checked: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {"checked": self.checked, "ok": self.ok, "violations": self.violations[:50]}


def _overlaps(intervals: list[Interval]) -> list[tuple[Interval, Interval]]:
    ordered = sorted(intervals)
    return [(a, b) for a, b in zip(ordered, ordered[1:]) if a.overlaps(b)]


def sybil_scan(snapshots: dict) -> MonitorResult:
    """
    Varredura dos ledgers: por veículo, no máximo um ticket e um pseudônimo
    válidos em cada instante, somando todas as PCAs.
    """
    result = MonitorResult("sybil")
    tickets = defaultdict(list)
    snapset = SnapshotSet()
    for snap in snapshots.values():
        snapset.add(snap)
    for ltca in snapset.ltcas.values():
        for row in ltca.tickets:
            tickets[row.subject_id].append(row.interval)
    intervals = {}
    for pca in snapset.pcas.values():
        for row in pca.pseudonyms:
            intervals[(pca.ca_id, row.serial)] = row.interval
    pseudonyms = defaultdict(list)
    if snapset.ltcas or snapset.pcas:
        closure = collusion_closure(sorted(snapshots), snapset)
        for subject, key in closure.id_links:
            pseudonyms[subject].append(intervals[key])
    for kind, table in (("tickets", tickets), ("pseudônimos", pseudonyms)):
        for subject, held in sorted(table.items()):
            result.checked += len(held)
            for a, b in _overlaps(held):
                result.violations.append(
                    f"{subject}: {kind} sobrepostos [{a.start}, {a.end}) e [{b.start}, {b.end})"
                )
    return result


def pool_disjointness(clients) -> MonitorResult:
    """Os pseudônimos recebidos por cada veículo nunca se sobrepõem no tempo."""
    result = MonitorResult("pool")
    for client in clients:
        held = [e.interval for e in client.events]
        result.checked += len(held)
        for a, b in _overlaps(held):
            result.violations.append(f"{client.subject_id}: pool com [{a.start}, {a.end}) e [{b.start}, {b.end})")
    return result


def resolution_sample(deployment, events, fraction: float, seed: int, operator) -> tuple[MonitorResult, list]:
    """
    Resolve uma amostra dos pseudônimos emitidos pela RA do domínio emissor,
    revogando os pseudônimos do ticket, e confere o dono devolvido.
    Devolve também os eventos amostrados para o monitor de CRL.
    """
    result = MonitorResult("resolution")
    if not events or fraction <= 0:
        return result, []
    count = min(len(events), math.ceil(len(events) * fraction))
    rng = np.random.default_rng(seed)
    picked = [events[i] for i in sorted(rng.choice(len(events), size=count, replace=False))]
    for event in picked:
        domain = deployment.trust.get(event.issuer).domain
        ra = deployment.authorities[deployment.topology.domain(domain).ra.id]
        request = ResolutionRequest(event.issuer, event.serial, "monitor de totalidade do harness", True)
        result.checked += 1
        try:
            found = resolve(ra, deployment.transport, request, operator)
        except (VpkiError, PermissionError) as exc:
            result.violations.append(f"{event.issuer}/{event.serial}: {type(exc).__name__}")
            continue
        if found.subject_id != event.subject_id:
            result.violations.append(
                f"{event.issuer}/{event.serial}: resolvido para {found.subject_id}, dono {event.subject_id}"
            )
    return result, picked


def crl_snapshot(deployment) -> dict:
    return {ca_id: get_crl(deployment.authorities[ca_id]) for ca_id in deployment.ids(Role.PCA)}


def crl_monotonicity(deployment, before: dict, revoked_events) -> MonitorResult:
    """
    Depois das revogações da amostra: sequência não decresce, nenhuma entrada
    some, o delta desde a sequência anterior fecha a diferença e todo
    pseudônimo revogado que ainda não expirou está listado.
    """
    result = MonitorResult("crl")
    now = deployment.clock.now()
    for ca_id, old in sorted(before.items()):
        pca = deployment.authorities[ca_id]
        new = get_crl(pca)
        delta = get_crl(pca, old.sequence)
        result.checked += 1
        if not (signature_valid(new, pca.public_key) and signature_valid(delta, pca.public_key)):
            result.violations.append(f"{ca_id}: CRL sem assinatura válida")
        if new.sequence < old.sequence:
            result.violations.append(f"{ca_id}: sequência {old.sequence} -> {new.sequence}")
        if not set(old.entries) <= set(new.entries):
            result.violations.append(f"{ca_id}: entradas sumiram da CRL")
        if set(old.entries) | set(delta.entries) != set(new.entries):
            result.violations.append(f"{ca_id}: delta desde {old.sequence} não fecha a CRL")
        listed = set(new.entries)
        for event in revoked_events:
            if event.issuer == ca_id and event.interval.end > now and event.serial not in listed:
                result.violations.append(f"{ca_id}: pseudônimo revogado {event.serial} fora da CRL")
    return result


def attack_rejections(records) -> MonitorResult:
    """Nenhum pedido forjado pode ser atendido."""
    result = MonitorResult("attacks")
    for r in records:
        if r.op.startswith("attack_"):
            result.checked += 1
            if r.ok:
                result.violations.append(f"{r.op} aceito por {r.server}")
    return result
