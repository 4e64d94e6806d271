"""
Política de domínio (Γ, τ, janela de relógio, limiar de PoP).

Todas as autoridades de um domínio compartilham o mesmo arquivo de política:
é isso que alinha tickets e pseudônimos à mesma grade.
"""
import json
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .exceptions import PolicyInvalid


class DomainPolicy(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    ticket_interval_seconds: int = Field(3600, gt=0)
    pseudonym_lifetime_seconds: int = Field(300, gt=0)
    clock_skew_seconds: int = Field(300, ge=0)
    grid_epoch: int = Field(0, ge=0)
    pop_failure_threshold: int = Field(3, ge=1)
    max_batch: int = Field(1000, ge=1)

    @model_validator(mode="after")
    def _ticket_interval_multiple_of_lifetime(self):
        if self.ticket_interval_seconds % self.pseudonym_lifetime_seconds:
            raise ValueError("ticket_interval_seconds precisa ser múltiplo de pseudonym_lifetime_seconds")
        return self

    @property
    def slots_per_ticket(self) -> int:
        return self.ticket_interval_seconds // self.pseudonym_lifetime_seconds

    @property
    def nonce_retention_seconds(self) -> int:
        return 2 * self.clock_skew_seconds


def load_policy(path: str | Path) -> DomainPolicy:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return DomainPolicy.model_validate(raw)
    except OSError as exc:
        raise PolicyInvalid(f"não foi possível ler {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PolicyInvalid(f"{path} não é JSON válido: {exc}") from exc
    except ValidationError as exc:
        raise PolicyInvalid(str(exc)) from exc


def dump_policy(policy: DomainPolicy, path: str | Path) -> None:
    Path(path).write_text(policy.model_dump_json(indent=2), encoding="utf-8")


def default_policy() -> DomainPolicy:
    """Política das autoridades sem arquivo próprio (diretório, RA)."""
    from django.conf import settings

    return DomainPolicy(
        clock_skew_seconds=settings.VPKI_CLOCK_SKEW_SECONDS,
        max_batch=settings.VPKI_MAX_BATCH,
    )
