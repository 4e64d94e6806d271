"""
Identidade e contexto de execução de uma autoridade (LTCA, PCA, RA, diretório).

Os serviços recebem um `Authority` como primeiro argumento, do mesmo jeito
que as funções de serviço recebem o objeto sobre o qual agem.
"""
import threading
from dataclasses import dataclass, field

from django.conf import settings

from . import crypto
from .clock import SystemClock
from .credentials import CaId, Role, TrustStore
from .exceptions import Unauthorized
from .models import SerialCounter
from .policy import DomainPolicy, default_policy
from .wire import NonceCache


@dataclass
class Authority:
    ca_id: CaId
    role: Role
    keypair: crypto.KeyPair = field(repr=False)
    trust: TrustStore = field(repr=False)
    policy: DomainPolicy = field(default_factory=default_policy)
    domain: str = ""
    clock: object = field(default_factory=SystemClock)
    serial_offset: int = 0
    serial_stride: int = 1
    nonce_cache: NonceCache | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 0 <= self.serial_offset < self.serial_stride:
            raise ValueError("serial_offset precisa estar em [0, serial_stride)")
        if self.nonce_cache is None:
            self.nonce_cache = NonceCache(
                max(self.policy.nonce_retention_seconds, settings.VPKI_NONCE_RETENTION_SECONDS),
                self.clock,
                maxsize=settings.VPKI_NONCE_CACHE_SIZE,
            )
        self._trust_lock = threading.Lock()

    @property
    def public_key(self) -> crypto.PublicKey:
        return self.keypair.public

    def now(self) -> int:
        return self.clock.now()

    def sign(self, msg: bytes) -> crypto.Signature:
        return self.keypair.sign(msg)

    def next_serials(self, kind: str, count: int = 1) -> list[int]:
        return SerialCounter.allocate(
            self.ca_id, kind, count=count, offset=self.serial_offset, stride=self.serial_stride
        )

    def next_serial(self, kind: str) -> int:
        return self.next_serials(kind, 1)[0]

    def update_trust(self, trust: TrustStore) -> None:
        """Troca o trust store inteiro (cópia na atualização)."""
        with self._trust_lock:
            self.trust = trust

    def require_ra(self, client_key: crypto.PublicKey | None) -> None:
        if not self.trust.is_ra_key(client_key):
            raise Unauthorized("operação restrita a uma RA presente no trust store")
