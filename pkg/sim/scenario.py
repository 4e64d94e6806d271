"""Arquivo de cenário do harness (`sim run <scenario.json>`)."""
import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from core.exceptions import ScenarioInvalid
from core.policy import DomainPolicy
from core.topology import AuthoritySpec, DomainSpec, Topology

# Γ = 6000 s e τ = 60 s: 100 slots por ticket, um pedido de 100 pseudônimos a cada 100 minutos.
SIM_POLICY = DomainPolicy(ticket_interval_seconds=6000, pseudonym_lifetime_seconds=60)


def two_domain_topology(pca_replicas: int = 1, policy: DomainPolicy = SIM_POLICY) -> Topology:
    def domain(name: str) -> DomainSpec:
        low = name.lower()
        return DomainSpec(
            name=name,
            rca=AuthoritySpec(id=f"rca-{low}"),
            ltca=AuthoritySpec(id=f"ltca-{low}"),
            pcas=[AuthoritySpec(id=f"pca-{low}-1")],
            ra=AuthoritySpec(id=f"ra-{low}"),
            pca_replicas=pca_replicas,
            policy=policy,
        )

    return Topology(domains=[domain("A"), domain("B")])


class FaultSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    server: str = Field(min_length=1, description="CaId ou id de réplica (pca-a-1#0).")
    at: float = Field(ge=0, description="Segundos de cenário desde o início.")
    restore_at: float | None = Field(None, ge=0)

    @model_validator(mode="after")
    def _restore_after_crash(self):
        if self.restore_at is not None and self.restore_at <= self.at:
            raise ValueError("restore_at precisa ser depois de at")
        return self


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    vehicles: int = Field(200, ge=0, description="Veículos legítimos.")
    frequency_per_hour: float = Field(6.0, ge=0, description="Pedidos por veículo por hora (média de Poisson).")
    pseudonyms_per_request: int = Field(100, ge=1)
    sub_interval_seconds: int | None = Field(
        None, gt=0, description="Duração pedida a cada vez; padrão Γ do domínio."
    )
    duration_seconds: float = Field(300.0, gt=0, description="Duração em segundos de cenário.")
    roaming_fraction: float = Field(0.0, ge=0, le=1, description="Fração dos pedidos feitos em domínio estrangeiro.")
    topology: Topology = Field(default_factory=two_domain_topology)
    attackers: int = Field(0, ge=0)
    attacker_frequency_per_hour: float = Field(360.0, ge=0)
    attacker_kind: Literal["fake_ltc", "fake_ticket", "mixed"] = "mixed"
    faults: list[FaultSpec] = Field(default_factory=list)
    time_scale: float = Field(1.0, gt=0, description="Segundos de cenário por segundo real.")
    start_time: int = Field(1_800_000_000, ge=0, description="Instante do relógio de cenário no início.")
    workers: int = Field(32, ge=1)
    resolution_sample: float = Field(0.01, ge=0, le=1, description="Fração dos pseudônimos resolvida pelo monitor.")
    seed: int = 0

    @model_validator(mode="after")
    def _faults_target_known_servers(self):
        known = {spec.id for spec, _role, _domain in self.topology.authorities()}
        for d in self.topology.domains:
            known.update(f"{p.id}#{i}" for p in d.pcas for i in range(d.pca_replicas))
        for fault in self.faults:
            if fault.server not in known:
                raise ValueError(f"falha agendada para servidor desconhecido: {fault.server}")
        if self.roaming_fraction > 0 and len(self.topology.domains) < 2:
            raise ValueError("roaming exige pelo menos dois domínios")
        return self


def load_scenario(path) -> Scenario:
    try:
        return Scenario.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))
    except OSError as exc:
        raise ScenarioInvalid(f"não foi possível ler {path}: {exc}") from exc
    except (json.JSONDecodeError, ValidationError) as exc:
        raise ScenarioInvalid(str(exc)) from exc


def scenario_schema() -> dict:
    return Scenario.model_json_schema()
