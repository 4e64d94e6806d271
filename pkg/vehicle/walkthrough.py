"""
Roteiro de demonstração do cliente: uma lista de passos em JSON executada
contra servidores reais, para acompanhar o protocolo à mão.
"""
import json
import logging
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from core.credentials import Interval
from core.exceptions import ScenarioInvalid, VpkiError

logger = logging.getLogger(__name__)


class Step(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    op: Literal["enroll", "update_ltc", "ticket", "pseudonyms", "roam", "crl", "status", "advance"]
    pca: str | None = None
    ltca: str | None = None
    start: int | None = Field(None, ge=0)
    end: int | None = Field(None, ge=0)
    count: int | None = Field(None, ge=1)
    serial: int | None = Field(None, ge=0)
    seconds: int | None = Field(None, ge=0)

    def interval(self) -> Interval:
        if self.start is None or self.end is None:
            raise ScenarioInvalid(f"passo {self.op} precisa de start e end")
        return Interval(self.start, self.end)

    def need(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise ScenarioInvalid(f"passo {self.op} precisa de {name}")


class Walkthrough(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    subject_id: str = Field(min_length=1)
    steps: list[Step]


def load_walkthrough(path) -> Walkthrough:
    try:
        return Walkthrough.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        raise ScenarioInvalid(f"roteiro {path} inválido: {exc}") from exc


def run_walkthrough(client, walkthrough: Walkthrough, out=print) -> int:
    """Executa os passos em ordem. Erros do protocolo são mostrados e o roteiro segue."""
    failures = 0
    for index, step in enumerate(walkthrough.steps, 1):
        try:
            out(f"[{index}] {step.op}: {_run_step(client, step)}")
        except VpkiError as exc:
            failures += 1
            out(f"[{index}] {step.op}: {type(exc).__name__} ({exc})")
    return failures


def _run_step(client, step: Step) -> str:
    if step.op == "enroll":
        return f"LTC {client.enroll(step.interval()).serial}"
    if step.op == "update_ltc":
        return f"LTC {client.update_ltc().serial}"
    if step.op == "ticket":
        step.need("pca")
        held = client.acquire_ticket(step.pca, step.interval())
        return f"ticket {held.ticket.serial} [{held.ticket.interval.start}, {held.ticket.interval.end})"
    if step.op == "pseudonyms":
        step.need("pca")
        return f"{client.acquire_pseudonyms(step.pca, step.interval(), step.count)} pseudônimos"
    if step.op == "roam":
        step.need("ltca", "pca")
        return f"{client.roam(step.ltca, step.pca, step.interval(), step.count)} pseudônimos de {step.pca}"
    if step.op == "crl":
        step.need("pca")
        cache = client.refresh_crl(step.pca)
        return f"CRL {cache.sequence} com {len(cache.entries)} entradas"
    if step.op == "status":
        step.need("pca", "serial")
        return client.check_status(step.pca, step.serial).name
    step.need("seconds")
    if not hasattr(client.clock, "advance"):
        raise ScenarioInvalid("advance exige --manual-clock")
    return f"relógio em {client.clock.advance(step.seconds)}"
