"""
Execução de um cenário: sobe a implantação em processo, registra a frota,
despacha a agenda em laço aberto, roda os monitores e devolve o relatório.
"""
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from django.db import connection

from core.clock import ScaledClock
from core.credentials import Interval
from core.channels import Channel
from core.encoding import encode_tagged
from core.exceptions import IoError, VpkiError
from privacy.transcript import Transcript
from vehicle.client import VehicleClient

from .deployment import Deployment
from .metrics import MetricCollector, export, failover_window, monotonic_us, perf_sanity, summarize
from .monitors import (
    MonitorResult,
    attack_rejections,
    crl_monotonicity,
    crl_snapshot,
    pool_disjointness,
    resolution_sample,
    sybil_scan,
)
from .scenario import Scenario
from .workload import AttackEvent, FaultEvent, VehicleEvent, build_schedule, forge_request

logger = logging.getLogger(__name__)


@dataclass
class FleetMember:
    client: VehicleClient
    home: str
    lock: threading.Lock = field(default_factory=threading.Lock)
    next_free: int = 0


@dataclass
class MetricsReport:
    scenario: Scenario
    records: list
    monitors: list[MonitorResult]
    wall_seconds: float
    issued: int
    events: list = field(default_factory=list, repr=False)
    # (ação, servidor, instante em µs monotônicos) de cada falha aplicada
    faults: list = field(default_factory=list)

    @property
    def summary(self) -> dict:
        return summarize(self.records)

    @property
    def ok(self) -> bool:
        return all(m.ok for m in self.monitors)

    @property
    def served(self) -> int:
        return sum(1 for r in self.records if r.op == "issuance" and r.ok)

    @property
    def legit_per_second(self) -> float:
        return self.served / self.wall_seconds if self.wall_seconds > 0 else 0.0

    def failover(self, recovery_seconds: float = 5.0) -> list:
        """Uma janela por queda; `recovery_seconds` é tempo de cenário."""
        recovery_us = int(recovery_seconds / self.scenario.time_scale * 1_000_000)
        return [
            failover_window(self.records, server, at_us, recovery_us)
            for action, server, at_us in self.faults if action == "crash"
        ]

    def outcomes(self) -> dict:
        """Multiconjunto (op, resultado) da rodada, sem latências."""
        counts = {}
        for r in self.records:
            key = f"{r.op}:{r.outcome}"
            counts[key] = counts.get(key, 0) + 1
        return dict(sorted(counts.items()))

    def as_dict(self) -> dict:
        return {
            "vehicles": self.scenario.vehicles,
            "attackers": self.scenario.attackers,
            "seed": self.scenario.seed,
            "wall_seconds": self.wall_seconds,
            "pseudonyms_issued": self.issued,
            "served_per_second": self.legit_per_second,
            "outcomes": self.outcomes(),
            "operations": self.summary,
            "monitors": {m.name: m.as_dict() for m in self.monitors},
            "perf": perf_sanity(self.summary),
            "failover": [w.as_dict() for w in self.failover()],
        }


class Harness:
    def __init__(self, scenario: Scenario, clock=None):
        self.scenario = scenario
        self.clock = clock or ScaledClock(scenario.start_time, scenario.time_scale)
        self.deployment = Deployment(scenario.topology, self.clock)
        self.collector = MetricCollector()
        self.fleet: list[FleetMember] = []
        self.fault_marks: list[tuple[str, str, int]] = []

    @property
    def policies(self) -> dict:
        return {d.name: self.deployment.policy_of(d.name) for d in self.scenario.topology.domains}

    def enroll_fleet(self) -> None:
        domains = self.scenario.topology.domains
        now = self.clock.now()
        validity = Interval(now, now + int(self.scenario.duration_seconds) + 30 * 86400)
        for index in range(self.scenario.vehicles):
            home = domains[index % len(domains)]
            client = VehicleClient(
                f"veiculo-{index:05d}", home.ltca.id, self.deployment.transport, self.deployment.trust, self.clock,
                policy=self.deployment.policy_of(home.name), policies=self.policies,
            )
            self.collector.timed("enroll", home.ltca.id, client.enroll, validity)
            self.fleet.append(FleetMember(client, home.name))
        logger.info("frota de %d veículos registrada", len(self.fleet))

    # --- tarefas ---

    def _request_interval(self, member: FleetMember, domain: str) -> Interval:
        """Próximo período livre do veículo, começando na grade τ do domínio da PCA."""
        policy = self.deployment.policy_of(domain)
        tau = policy.pseudonym_lifetime_seconds
        length = self.scenario.sub_interval_seconds or policy.ticket_interval_seconds
        start = max(self.clock.now(), member.next_free)
        start = policy.grid_epoch + -((policy.grid_epoch - start) // tau) * tau
        return Interval(start, start + length)

    def _vehicle_task(self, event: VehicleEvent) -> None:
        member = self.fleet[event.vehicle]
        client = member.client
        timed = self.collector.timed
        try:
            with member.lock:
                domain = self.scenario.topology.domain(event.foreign_domain if event.roam else member.home)
                ltca = domain.ltca.id if event.roam else None
                pca = domain.pcas[event.pca_index].id
                interval = self._request_interval(member, domain.name)
                # Chaves geradas fora da medição.
                keys = client.generate_keys(self.scenario.pseudonyms_per_request)
                start = monotonic_us()
                try:
                    held = timed("ticket", client.home_ltca, client.acquire_ticket, ltca or pca, interval)
                    member.next_free = held.ticket.interval.end
                    if ltca is not None:
                        timed("exchange", ltca, client.exchange_ticket, ltca, pca, interval)
                    timed("pseudonyms", pca, client.acquire_pseudonyms, pca, interval, keys=keys)
                except VpkiError as exc:
                    self.collector.add_outcome("issuance", pca, start, type(exc).__name__)
                    logger.info("%s: pedido falhou (%s)", client.subject_id, type(exc).__name__)
                else:
                    self.collector.add_outcome("issuance", pca, start)
                client.prune()
        finally:
            connection.close()

    def _attack_task(self, event: AttackEvent) -> None:
        try:
            policy = self.deployment.policy_of(event.domain)
            forged = forge_request(event, self.scenario.topology, self.clock.now(), policy.ticket_interval_seconds)
            channel = Channel(
                self.deployment.transport, forged.server_id, self.deployment.trust.key_of(forged.server_id),
                self.clock, skew=policy.clock_skew_seconds, auth=forged.auth,
            )
            try:
                self.collector.timed(f"attack_{event.kind}", forged.server_id, channel.call,
                                     forged.msg_type, forged.body, forged.response_cls)
            except VpkiError:
                pass
        finally:
            connection.close()

    def _apply_fault(self, event: FaultEvent) -> None:
        self.fault_marks.append((event.action, event.server, monotonic_us()))
        if event.action == "crash":
            self.deployment.transport.crash(event.server)
        else:
            self.deployment.transport.restore(event.server)
        logger.warning("falha programada: %s em %s (t=%.1fs)", event.action, event.server, event.at)

    # --- rodada ---

    def _wait_until(self, scenario_time: float) -> None:
        # Relógio manual (testes) é adiantado em vez de esperado.
        if hasattr(self.clock, "wall_seconds_until"):
            wait = self.clock.wall_seconds_until(scenario_time)
            if wait > 0:
                time.sleep(wait)
        elif hasattr(self.clock, "set"):
            self.clock.set(max(self.clock.now(), int(scenario_time)))

    def dispatch(self, schedule) -> None:
        origin = self.clock.now()
        with ThreadPoolExecutor(max_workers=self.scenario.workers) as pool:
            futures = []
            for event in schedule:
                self._wait_until(origin + event.at)
                if isinstance(event, FaultEvent):
                    self._apply_fault(event)
                elif isinstance(event, VehicleEvent):
                    futures.append(pool.submit(self._vehicle_task, event))
                else:
                    futures.append(pool.submit(self._attack_task, event))
            for future in futures:
                future.result()

    def run(self) -> MetricsReport:
        schedule = build_schedule(self.scenario)
        self.enroll_fleet()
        logger.info("rodada com %d eventos (semente %d)", len(schedule), self.scenario.seed)
        started = time.monotonic()
        self.dispatch(schedule)
        wall = time.monotonic() - started
        for fault in self.scenario.faults:
            self.deployment.transport.restore(fault.server)
        return self.check(wall)

    def issuance_events(self) -> list:
        return [e for member in self.fleet for e in member.client.events]

    def check(self, wall_seconds: float) -> MetricsReport:
        events = self.issuance_events()
        self.snapshots = self.deployment.snapshots()
        self.transcript = Transcript.from_events(events)
        records = self.collector.records()
        monitors = [sybil_scan(self.snapshots), pool_disjointness(m.client for m in self.fleet)]
        before = crl_snapshot(self.deployment)
        resolution, sampled = resolution_sample(
            self.deployment, events, self.scenario.resolution_sample, self.scenario.seed, self.deployment.operator()
        )
        monitors += [resolution, crl_monotonicity(self.deployment, before, sampled), attack_rejections(records)]
        for monitor in monitors:
            if not monitor.ok:
                logger.error("monitor %s disparou: %s", monitor.name, monitor.violations[:5])
        return MetricsReport(
            self.scenario, records, monitors, wall_seconds, len(events), events, faults=list(self.fault_marks)
        )

    def write_outputs(self, report: MetricsReport, out_dir) -> list[Path]:
        """Métricas, transcrição e os snapshots das LTCAs e PCAs para `privacy analyze`."""
        written = export(report, out_dir)
        out = Path(out_dir)
        try:
            (out / "transcript.bin").write_bytes(encode_tagged(self.transcript))
            snap_dir = out / "snapshots"
            snap_dir.mkdir(parents=True, exist_ok=True)
            for ca_id, snap in sorted(self.snapshots.items()):
                (snap_dir / f"{ca_id}.snap").write_bytes(encode_tagged(snap))
        except OSError as exc:
            raise IoError(f"não foi possível gravar em {out}: {exc}") from exc
        return written + [out / "transcript.bin"]


def run(scenario: Scenario, out_dir=None, clock=None) -> MetricsReport:
    harness = Harness(scenario, clock)
    report = harness.run()
    if out_dir is not None:
        harness.write_outputs(report, out_dir)
    return report


def ramp(scenario: Scenario, levels, prepare=None, clock_factory=None) -> list[dict]:
    """
    Repete o cenário para cada número de atacantes. `prepare(level)` é
    chamado antes de cada nível (o comando aponta um banco novo ali).
    """
    rows = []
    for level in levels:
        if prepare is not None:
            prepare(level)
        clock = clock_factory() if clock_factory else None
        report = run(scenario.model_copy(update={"attackers": level}), clock=clock)
        attacks = [r for r in report.records if r.op.startswith("attack_")]
        rows.append({
            "attackers": level,
            "served_per_second": report.legit_per_second,
            "served": report.served,
            "attack_requests": len(attacks),
            "attacks_accepted": sum(1 for r in attacks if r.ok),
            "ok": report.ok,
        })
        logger.info("rampa: %d atacantes, %.2f pedidos legítimos/s", level, report.legit_per_second)
    return rows
