"""
Medição das emissões isoladas: ticket, lote de 100 pseudônimos de ponta a
ponta e o processamento de 10 pseudônimos dentro da PCA.
"""
import logging

from core import crypto
from core.credentials import Interval, make_csr
from pca import services as pca_services
from vehicle.client import VehicleClient

from .metrics import MetricCollector, monotonic_us, perf_sanity, summarize

logger = logging.getLogger(__name__)


def run_bench(deployment, rounds: int = 5, collector: MetricCollector | None = None) -> dict:
    """
    Um veículo novo por rodada no primeiro domínio da topologia. Chaves e
    CSRs são gerados fora da medição.

    :returns: `perf_sanity` do resumo, mais o próprio resumo em "summary".
    """
    collector = collector or MetricCollector()
    domain = deployment.topology.domains[0]
    pca_id = domain.pcas[0].id
    policy = deployment.policy_of(domain.name)
    policies = {d.name: deployment.policy_of(d.name) for d in deployment.topology.domains}
    tau = policy.pseudonym_lifetime_seconds
    for index in range(rounds):
        now = deployment.clock.now()
        client = VehicleClient(
            f"bench-{index:03d}", domain.ltca.id, deployment.transport, deployment.trust, deployment.clock,
            policy=policy, policies=policies,
        )
        client.enroll(Interval(now, now + 86400))
        start = policy.grid_epoch + -((policy.grid_epoch - now) // tau) * tau
        batch = Interval(start, start + 100 * tau)
        keys = client.generate_keys(100)
        began = monotonic_us()
        held = collector.timed("ticket", domain.ltca.id, client.acquire_ticket, pca_id, batch)
        client.acquire_pseudonyms(pca_id, batch, keys=keys)
        collector.add_outcome("issuance_100", pca_id, began)

        later = Interval(held.ticket.interval.end, held.ticket.interval.end + 10 * tau)
        second = client.acquire_ticket(pca_id, later)
        csrs = [make_csr(crypto.generate_keypair()) for _ in range(10)]
        collector.timed(
            "pca_10", pca_id, pca_services.issue_pseudonyms,
            deployment.authorities[pca_id], second.rnd, later, second.ticket, csrs,
        )
    summary = summarize(collector.records())
    checks = perf_sanity(summary)
    for op, check in checks.items():
        logger.info("bench %s: mediana %.1f ms (referência %.1f ms, limite %.1f ms)",
                    op, check["median_ms"], check["reference_ms"], check["limit_ms"])
    return {**checks, "summary": summary}
