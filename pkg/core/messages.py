"""Corpos de mensagem comuns a todos os serviços."""
from dataclasses import dataclass

from .encoding import U16, Canonical, Str


@dataclass(frozen=True)
class ErrorBody(Canonical):
    """Corpo de uma resposta `err` (0x00FF): código estável + mensagem."""

    code: int
    message: str

    __layout__ = (("code", U16), ("message", Str()))
