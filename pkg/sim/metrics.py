"""Registros de latência, resumo por operação, análises da rodada e exportação (CSV, JSON, .dat do gnuplot)."""
import csv
import json
import logging
import threading
import time
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from core.exceptions import IoError

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("op", "server", "start_us", "end_us", "outcome")
CDF_STEPS = np.linspace(0.01, 1.0, 100)


def monotonic_us() -> int:
    return time.monotonic_ns() // 1000


@dataclass(frozen=True)
class MetricRecord:
    op: str
    server: str
    start_us: int
    end_us: int
    outcome: str = "ok"

    def __post_init__(self):
        if self.end_us < self.start_us:
            raise ValueError("registro termina antes de começar")

    @property
    def latency_ms(self) -> float:
        return (self.end_us - self.start_us) / 1000.0

    @property
    def ok(self) -> bool:
        return self.outcome == "ok"


class MetricCollector:
    """Uma lista por thread, sem trava no caminho quente; `records()` junta tudo depois da rodada."""

    def __init__(self):
        self._local = threading.local()
        self._lists = []
        self._lock = threading.Lock()

    def _bucket(self) -> list:
        bucket = getattr(self._local, "records", None)
        if bucket is None:
            bucket = self._local.records = []
            with self._lock:
                self._lists.append(bucket)
        return bucket

    def add(self, record: MetricRecord) -> None:
        self._bucket().append(record)

    def add_outcome(self, op: str, server: str, start_us: int, outcome: str = "ok") -> None:
        self.add(MetricRecord(op, server, start_us, monotonic_us(), outcome))

    def timed(self, op: str, server: str, fn, *args, **kwargs):
        """Executa `fn` medindo a latência; a exceção é registrada pelo nome e propagada."""
        start = monotonic_us()
        try:
            result = fn(*args, **kwargs)
        except Exception as exc:
            self.add(MetricRecord(op, server, start, monotonic_us(), type(exc).__name__))
            raise
        self.add(MetricRecord(op, server, start, monotonic_us()))
        return result

    def records(self) -> list[MetricRecord]:
        with self._lock:
            merged = [r for bucket in self._lists for r in bucket]
        return sorted(merged, key=lambda r: (r.start_us, r.op, r.server))


def summarize(records: list[MetricRecord]) -> dict:
    """Por operação: contagem, falhas, média, p50/p90/p99 e a CDF em passos de 1% (ms, só sucessos)."""
    by_op = defaultdict(list)
    failures = defaultdict(lambda: defaultdict(int))
    for r in records:
        if r.ok:
            by_op[r.op].append(r.latency_ms)
        else:
            failures[r.op][r.outcome] += 1
    summary = {}
    for op in sorted(set(by_op) | set(failures)):
        values = np.asarray(by_op.get(op, []), dtype=float)
        entry = {"count": int(values.size), "failures": dict(sorted(failures[op].items()))}
        if values.size:
            entry.update({
                "mean": float(np.mean(values)),
                "p50": float(np.quantile(values, 0.5)),
                "p90": float(np.quantile(values, 0.9)),
                "p99": float(np.quantile(values, 0.99)),
                "max": float(np.max(values)),
                "cdf": [[round(float(p), 2), float(q)] for p, q in zip(CDF_STEPS, np.quantile(values, CDF_STEPS))],
            })
        summary[op] = entry
    return summary


# Medianas de referência e limites em ms; o limite dá 10× de folga para variação de hardware.
PERF_REFERENCE_MS = {
    "ticket": (5.0, 50.0),
    "issuance_100": (500.0, 5000.0),
    "pca_10": (26.0, 260.0),
}


def perf_sanity(summary: dict) -> dict:
    """Mediana medida ao lado da referência, para as operações presentes no resumo."""
    checks = {}
    for op, (reference, limit) in PERF_REFERENCE_MS.items():
        entry = summary.get(op)
        if not entry or not entry["count"]:
            continue
        checks[op] = {
            "median_ms": entry["p50"],
            "reference_ms": reference,
            "limit_ms": limit,
            "ok": entry["p50"] <= limit,
        }
    return checks


def _p95(values) -> float | None:
    return float(np.quantile(np.asarray(values, dtype=float), 0.95)) if values else None


@dataclass(frozen=True)
class FailoverWindow:
    server: str
    before_p95_ms: float | None
    after_p95_ms: float | None
    after_requests: int
    after_success_rate: float | None

    def recovered(self, max_p95_ratio: float = 2.0) -> bool:
        if self.after_success_rate != 1.0:
            return False
        if self.before_p95_ms is None or self.after_p95_ms is None:
            return True
        return self.after_p95_ms <= max_p95_ratio * self.before_p95_ms

    def as_dict(self) -> dict:
        return {**asdict(self), "recovered": self.recovered()}


def failover_window(records, server: str, crash_us: int, recovery_us: int, op: str = "issuance") -> FailoverWindow:
    """
    p95 dos pedidos concluídos antes da queda contra os iniciados depois da
    janela de recuperação, e a taxa de sucesso desses últimos.
    """
    ops = [r for r in records if r.op == op]
    before = [r.latency_ms for r in ops if r.ok and r.end_us <= crash_us]
    after = [r for r in ops if r.start_us >= crash_us + recovery_us]
    served = [r.latency_ms for r in after if r.ok]
    return FailoverWindow(
        server=server,
        before_p95_ms=_p95(before),
        after_p95_ms=_p95(served),
        after_requests=len(after),
        after_success_rate=len(served) / len(after) if after else None,
    )


def ramp_shape(rows: list[dict], noise: float = 0.10, min_drop: float = 0.25) -> dict:
    """
    Vazão legítima não crescente ao longo da rampa (tolerando `noise`), queda
    de pelo menos `min_drop` no último nível e nenhum ataque aceito.
    """
    rates = [row["served_per_second"] for row in rows]
    monotone = all(b <= a * (1 + noise) for a, b in zip(rates, rates[1:]))
    drop = 1 - rates[-1] / rates[0] if rates and rates[0] > 0 else 0.0
    rejected = all(row["attacks_accepted"] == 0 for row in rows)
    return {
        "monotone": monotone,
        "drop": drop,
        "attacks_rejected": rejected,
        "ok": monotone and drop >= min_drop and rejected,
    }


def write_csv(records: list[MetricRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow((r.op, r.server, r.start_us, r.end_us, r.outcome))


def write_cdf(entry: dict, path) -> None:
    lines = ["# percentil latencia_ms"]
    lines += [f"{p:.2f} {q:.3f}" for p, q in entry.get("cdf", [])]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def export(report, out_dir, formats=("csv", "json")) -> list[Path]:
    """
    Grava latencies.csv, summary.json e um cdf_<op>.dat por operação.

    :raises IoError: se o diretório ou algum arquivo não puder ser escrito.
    """
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in formats:
            write_csv(report.records, out / "latencies.csv")
            written.append(out / "latencies.csv")
        if "json" in formats:
            (out / "summary.json").write_text(json.dumps(report.as_dict(), indent=2), encoding="utf-8")
            written.append(out / "summary.json")
            for op, entry in report.summary.items():
                if entry.get("cdf"):
                    path = out / f"cdf_{op}.dat"
                    write_cdf(entry, path)
                    written.append(path)
    except OSError as exc:
        raise IoError(f"não foi possível gravar em {out}: {exc}") from exc
    logger.info("métricas gravadas em %s (%d arquivos)", out, len(written))
    return written
