"""
Topologia de uma implantação multi-domínio e o material de confiança
derivado dela (chaves e trust store).

Cada domínio tem sua RCA; colocar as RCAs de todos os domínios no mesmo
trust store é a certificação cruzada.
"""
from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import crypto
from .credentials import Role, TrustAnchor, TrustStore
from .policy import DomainPolicy


class AuthoritySpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str = Field(min_length=1)
    address: str = ""

    @field_validator("id")
    @classmethod
    def _ca_id_fits(cls, value):
        if len(value.encode("utf-8")) > 64:
            raise ValueError("CaId passa de 64 bytes")
        return value


class DomainSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(pattern=r"^[A-Z]+$")
    rca: AuthoritySpec
    ltca: AuthoritySpec
    pcas: list[AuthoritySpec] = Field(min_length=1)
    ra: AuthoritySpec
    pca_replicas: int = Field(1, ge=1)
    policy: DomainPolicy | None = None


class Topology(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    domains: list[DomainSpec] = Field(min_length=1)
    directory: AuthoritySpec = AuthoritySpec(id="directory")

    @model_validator(mode="after")
    def _unique_names(self):
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise ValueError("nomes de domínio repetidos")
        ids = [spec.id for spec, _role, _domain in self.authorities()]
        if len(set(ids)) != len(ids):
            raise ValueError("CaIds repetidos na topologia")
        return self

    def authorities(self):
        """(spec, papel, domínio) de toda autoridade, RCAs primeiro."""
        for d in self.domains:
            yield d.rca, Role.RCA, d.name
        for d in self.domains:
            yield d.ltca, Role.LTCA, d.name
            for pca in d.pcas:
                yield pca, Role.PCA, d.name
            yield d.ra, Role.RA, d.name
        yield self.directory, Role.DIRECTORY, ""

    def domain(self, name: str) -> DomainSpec:
        for d in self.domains:
            if d.name == name:
                return d
        raise KeyError(name)

    def addresses(self) -> dict[str, str]:
        return {spec.id: spec.address for spec, _role, _domain in self.authorities() if spec.address}


@dataclass(frozen=True)
class DeploymentMaterial:
    keys: dict
    trust: TrustStore


def build_material(topology: Topology, seed: int | None = None) -> DeploymentMaterial:
    """Gera as chaves (derivadas de `seed` quando dada, só para testes) e o trust store."""
    keys = {}
    anchors = []
    for spec, role, domain in topology.authorities():
        rng_seed = None if seed is None else f"{seed}:{spec.id}".encode("utf-8")
        keys[spec.id] = crypto.generate_keypair(rng_seed)
        if role == Role.RCA:
            parent = None
        elif role == Role.DIRECTORY:
            parent = topology.domains[0].rca.id
        else:
            parent = topology.domain(domain).rca.id
        anchors.append(TrustAnchor(spec.id, keys[spec.id].public, role, parent, domain))
    return DeploymentMaterial(keys=keys, trust=TrustStore(tuple(anchors)))
