from dataclasses import dataclass

from core.credentials import CA_ID
from core.encoding import BOOL, U64, Canonical, Maybe, Str


@dataclass(frozen=True)
class ResolutionRequest(Canonical):
    pseudonym_issuer: str
    pseudonym_serial: int
    justification: str
    revoke_pseudonyms: bool = False
    revoke_ltc: bool = False

    __layout__ = (
        ("pseudonym_issuer", CA_ID),
        ("pseudonym_serial", U64),
        ("justification", Str(nonempty=True)),
        ("revoke_pseudonyms", BOOL),
        ("revoke_ltc", BOOL),
    )

    def __post_init__(self):
        if not self.justification.strip():
            raise ValueError("toda resolução precisa de justificativa")


@dataclass(frozen=True)
class ResolutionResponse(Canonical):
    """Resultado completo, ou parcial com o ponteiro para a LTCA de origem."""

    subject_id: str | None
    home_ltca: str
    partial: bool = False
    foreign_serial: int | None = None
    pseudonyms_revoked: int = 0
    ltc_revoked: bool = False

    __layout__ = (
        ("subject_id", Maybe(Str(nonempty=True))),
        ("home_ltca", CA_ID),
        ("partial", BOOL),
        ("foreign_serial", Maybe(U64)),
        ("pseudonyms_revoked", U64),
        ("ltc_revoked", BOOL),
    )
