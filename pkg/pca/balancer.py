"""
Balanceador de conexões na frente das réplicas de uma PCA.

As réplicas compartilham CaId e chave. Pedidos de pseudônimo são fixados a
uma réplica pelo hash do ticket, então um mesmo ticket sempre cai no mesmo
ledger de uso enquanto a réplica estiver de pé. Réplica que falha sai da
rotação e é sondada de novo a cada `retry_interval` segundos.
"""
import logging
import threading
import time

from core import crypto
from core.channels import WireRequest, WireResponse
from core.encoding import canonical_decode
from core.exceptions import DecodeError, FrameError, ServiceUnavailable
from core.wire import MsgType, deframe

from .messages import PseudonymRequest

logger = logging.getLogger(__name__)


def replica_id(ca_id: str, index: int) -> str:
    return f"{ca_id}#{index}"


class ReplicaBalancer:
    def __init__(self, transport, replica_ids: list[str], retry_interval: float = 1.0, monotonic=time.monotonic):
        if not replica_ids:
            raise ValueError("balanceador sem réplicas")
        self.transport = transport
        self.replica_ids = list(replica_ids)
        self.retry_interval = retry_interval
        self._monotonic = monotonic
        self._down_since: dict[str, float] = {}
        self._lock = threading.Lock()

    def healthy(self) -> list[str]:
        now = self._monotonic()
        with self._lock:
            for rid, since in list(self._down_since.items()):
                if now - since < self.retry_interval:
                    continue
                if self.transport.is_up(rid):
                    del self._down_since[rid]
                    logger.info("réplica %s de volta à rotação", rid)
                else:
                    self._down_since[rid] = now
            return [rid for rid in self.replica_ids if rid not in self._down_since]

    def mark_down(self, rid: str) -> None:
        with self._lock:
            self._down_since.setdefault(rid, self._monotonic())
        logger.warning("réplica %s fora da rotação", rid)

    @staticmethod
    def affinity_key(request: WireRequest) -> int:
        try:
            env = deframe(request.frame)
        except FrameError:
            return 0
        if env.msg_type == MsgType.PSNYM_REQ:
            try:
                ticket = canonical_decode(env.payload, PseudonymRequest).ticket
                digest = crypto.sha256(f"{ticket.issuer}/{ticket.serial}".encode("utf-8"))
                return int.from_bytes(digest[:8], "big")
            except DecodeError:
                pass
        return env.nonce

    def pick(self, request: WireRequest) -> str:
        healthy = self.healthy()
        if not healthy:
            raise ServiceUnavailable("nenhuma réplica disponível")
        return healthy[self.affinity_key(request) % len(healthy)]

    def __call__(self, request: WireRequest) -> WireResponse:
        target = self.pick(request)
        try:
            return self.transport.exchange(target, request)
        except ServiceUnavailable:
            self.mark_down(target)
            raise
