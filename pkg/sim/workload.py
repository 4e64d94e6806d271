"""
Agenda de eventos do harness: pedidos dos veículos (Poisson por veículo),
pedidos forjados dos atacantes e as falhas programadas.

Tudo sai de um único `numpy.random.Generator` semeado, consumido sempre na
mesma ordem, então a mesma semente dá a mesma sequência de eventos.
"""
from dataclasses import dataclass, field

import numpy as np

from core import crypto
from core.credentials import Interval, LongTermCertificate, Ticket, make_csr, sign_credential
from core.wire import MsgType
from ltca.messages import TicketRequest, TicketResponse
from pca.messages import PseudonymRequest, PseudonymResponse

from .scenario import Scenario

ATTACK_KINDS = ("fake_ltc", "fake_ticket")


@dataclass(frozen=True, order=True)
class VehicleEvent:
    at: float
    vehicle: int
    roam: bool = False
    foreign_domain: str = ""
    pca_index: int = 0


@dataclass(frozen=True, order=True)
class AttackEvent:
    at: float
    attacker: int
    kind: str
    domain: str


@dataclass(frozen=True, order=True)
class FaultEvent:
    at: float
    server: str
    action: str


@dataclass(frozen=True)
class ForgedRequest:
    server_id: str
    msg_type: int
    body: object
    response_cls: type
    auth: crypto.KeyPair | None = field(default=None, repr=False)


def poisson_arrivals(rng: np.random.Generator, rate_per_hour: float, duration: float) -> list[float]:
    """Instantes (segundos de cenário) de um processo de Poisson com a taxa dada."""
    if rate_per_hour <= 0:
        return []
    mean_gap = 3600.0 / rate_per_hour
    times = []
    t = float(rng.exponential(mean_gap))
    while t < duration:
        times.append(t)
        t += float(rng.exponential(mean_gap))
    return times


def vehicle_workload(scenario: Scenario, rng: np.random.Generator) -> list[VehicleEvent]:
    domains = [d.name for d in scenario.topology.domains]
    events = []
    for vehicle in range(scenario.vehicles):
        home = domains[vehicle % len(domains)]
        for at in poisson_arrivals(rng, scenario.frequency_per_hour, scenario.duration_seconds):
            roam = bool(rng.random() < scenario.roaming_fraction)
            domain = home
            if roam:
                others = [d for d in domains if d != home]
                domain = others[int(rng.integers(len(others)))]
            pcas = scenario.topology.domain(domain).pcas
            events.append(VehicleEvent(at, vehicle, roam, domain if roam else "", int(rng.integers(len(pcas)))))
    return events


def attacker_workload(kind: str, rate_per_hour: float, duration: float, rng: np.random.Generator,
                      attacker: int = 0, domains: tuple[str, ...] = ("A",)) -> list[AttackEvent]:
    """
    Pedidos de um atacante. `mixed` sorteia o tipo de cada pedido.
    Taxa zero dá uma lista vazia.
    """
    events = []
    for at in poisson_arrivals(rng, rate_per_hour, duration):
        chosen = kind
        if kind == "mixed":
            chosen = ATTACK_KINDS[int(rng.integers(len(ATTACK_KINDS)))]
        domain = domains[int(rng.integers(len(domains)))]
        events.append(AttackEvent(at, attacker, chosen, domain))
    return events


def fault_events(scenario: Scenario) -> list[FaultEvent]:
    events = []
    for fault in scenario.faults:
        events.append(FaultEvent(fault.at, fault.server, "crash"))
        if fault.restore_at is not None:
            events.append(FaultEvent(fault.restore_at, fault.server, "restore"))
    return events


def build_schedule(scenario: Scenario) -> list:
    """Todos os eventos da rodada em ordem de tempo (empates por tipo e campos)."""
    rng = np.random.default_rng(scenario.seed)
    domains = tuple(d.name for d in scenario.topology.domains)
    events = list(vehicle_workload(scenario, rng))
    for attacker in range(scenario.attackers):
        events.extend(attacker_workload(
            scenario.attacker_kind, scenario.attacker_frequency_per_hour, scenario.duration_seconds,
            rng, attacker, domains,
        ))
    events.extend(fault_events(scenario))
    order = {FaultEvent: 0, VehicleEvent: 1, AttackEvent: 2}
    return sorted(events, key=lambda e: (e.at, order[type(e)], e))


def forge_request(event: AttackEvent, topology, now: int, ticket_interval: int) -> ForgedRequest:
    """
    Monta um pedido bem enquadrado com credencial falsa: LTC ou ticket que
    dizem vir da LTCA real do domínio, mas assinados por uma chave qualquer.
    """
    domain = topology.domain(event.domain)
    ltca = domain.ltca.id
    fake = crypto.generate_keypair()
    interval = Interval(now, now + ticket_interval)
    if event.kind == "fake_ltc":
        ltc = sign_credential(
            LongTermCertificate(event.attacker + 1, f"atacante-{event.attacker}", fake.public,
                                Interval(now - 3600, now + 86400), ltca),
            fake,
        )
        body = TicketRequest(crypto.sha256(crypto.random_rnd()), interval, ltc)
        return ForgedRequest(ltca, MsgType.TICKET_REQ, body, TicketResponse, auth=fake)
    pca = domain.pcas[0].id
    rnd = crypto.random_rnd()
    ticket = sign_credential(
        Ticket(event.attacker + 1, crypto.hash_bind(pca, rnd), interval, interval.end, ltca),
        fake,
    )
    body = PseudonymRequest(rnd, interval, ticket, (make_csr(fake),))
    return ForgedRequest(pca, MsgType.PSNYM_REQ, body, PseudonymResponse)
