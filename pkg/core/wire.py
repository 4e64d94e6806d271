"""
Protocolo de fio: envelope, enquadramento binário e frescor (nonce + timestamp).

Frame = "VPKI" | versão 0x01 | msg_type (u16) | nonce (u64) | timestamp (u64)
        | tamanho do payload (u32) | payload. Tudo big-endian.
"""
import enum
import logging
import struct
import threading
from dataclasses import dataclass

from cachetools import TTLCache

from .exceptions import FrameError, ReplayedNonce, ServiceUnavailable, StaleTimestamp

logger = logging.getLogger(__name__)

MAGIC = b"VPKI"
VERSION = 0x01
HEADER = struct.Struct(">4sBHQQI")
HEADER_SIZE = HEADER.size  # 27
MAX_PAYLOAD = 16 * 1024 * 1024
NONCE_MODULUS = 1 << 64


class MsgType(enum.IntEnum):
    TICKET_REQ = 0x0001
    TICKET_RES = 0x0002
    PSNYM_REQ = 0x0003
    PSNYM_RES = 0x0004
    FTKT_REQ = 0x0005
    FTKT_RES = 0x0006
    NTKT_REQ = 0x0007
    NTKT_RES = 0x0008
    CRL_REQ = 0x0010
    CRL_RES = 0x0011
    OCSP_REQ = 0x0012
    OCSP_RES = 0x0013
    RESOLVE_REQ = 0x0020
    RESOLVE_RES = 0x0021
    # passo da resolução: pseudônimo → ticket na PCA, ticket → LTC na LTCA
    RESOLVE_STEP_REQ = 0x0022
    RESOLVE_STEP_RES = 0x0023
    REVOKE_REQ = 0x0024
    REVOKE_RES = 0x0025
    DIR_REQ = 0x0030
    DIR_RES = 0x0031
    REG_REQ = 0x0040
    REG_RES = 0x0041
    UPDATE_LTC_REQ = 0x0042
    UPDATE_LTC_RES = 0x0043
    ERR = 0x00FF


def response_type(request_type: int) -> int:
    """Toda requisição tem código ímpar e a resposta é o código seguinte."""
    return request_type + 1


class Freshness(enum.Enum):
    ACCEPT = "accept"
    STALE_TIMESTAMP = "stale_timestamp"
    REPLAYED_NONCE = "replayed_nonce"


@dataclass(frozen=True)
class Envelope:
    msg_type: int
    nonce: int
    timestamp: int
    payload: bytes = b""


def frame(env: Envelope) -> bytes:
    if len(env.payload) > MAX_PAYLOAD:
        raise FrameError(f"payload de {len(env.payload)} bytes excede o limite")
    try:
        header = HEADER.pack(MAGIC, VERSION, env.msg_type, env.nonce, env.timestamp, len(env.payload))
    except struct.error as exc:
        raise FrameError(f"campo de cabeçalho fora da faixa: {exc}") from exc
    return header + bytes(env.payload)


def deframe(data: bytes) -> Envelope:
    if len(data) < HEADER_SIZE:
        raise FrameError("frame menor que o cabeçalho")
    magic, version, msg_type, nonce, timestamp, length = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FrameError("magic inválido")
    if version != VERSION:
        raise FrameError(f"versão {version} não suportada")
    if length > MAX_PAYLOAD:
        raise FrameError("payload declarado excede o limite")
    if len(data) != HEADER_SIZE + length:
        raise FrameError("tamanho do payload não confere com o cabeçalho")
    return Envelope(msg_type, nonce, timestamp, bytes(data[HEADER_SIZE:]))


class NonceCache:
    """
    Nonces vistos dentro da janela de retenção. `check_and_insert` é atômico:
    duas threads com o mesmo nonce nunca são aceitas juntas. Cheio, o cache
    recusa nonces novos em vez de esquecer um que ainda está na janela.
    """

    def __init__(self, retention_seconds: int, clock, maxsize: int = 1_000_000):
        self._seen = TTLCache(maxsize=maxsize, ttl=retention_seconds, timer=clock.now)
        self._lock = threading.Lock()

    def check_and_insert(self, nonce: int) -> bool:
        """
        :raises ServiceUnavailable: se a janela já guarda `maxsize` nonces.
        """
        with self._lock:
            if nonce in self._seen:
                return False
            self._seen.expire()
            if len(self._seen) >= self._seen.maxsize:
                logger.warning("cache de nonces cheio (%d); pedido recusado", self._seen.maxsize)
                raise ServiceUnavailable("cache de nonces cheio")
            self._seen[nonce] = True
            return True

    def __len__(self):
        with self._lock:
            return len(self._seen)


def check_freshness(env: Envelope, now: int, seen_nonces: NonceCache, skew: int = 300) -> Freshness:
    if abs(env.timestamp - now) > skew:
        return Freshness.STALE_TIMESTAMP
    if not seen_nonces.check_and_insert(env.nonce):
        return Freshness.REPLAYED_NONCE
    return Freshness.ACCEPT


def ensure_fresh(env: Envelope, now: int, seen_nonces: NonceCache, skew: int = 300) -> None:
    verdict = check_freshness(env, now, seen_nonces, skew)
    if verdict is Freshness.STALE_TIMESTAMP:
        raise StaleTimestamp(f"timestamp {env.timestamp} fora de ±{skew}s de {now}")
    if verdict is Freshness.REPLAYED_NONCE:
        raise ReplayedNonce()


def respond(request_env: Envelope, body: bytes, now: int, msg_type: int | None = None) -> Envelope:
    return Envelope(
        msg_type=response_type(request_env.msg_type) if msg_type is None else msg_type,
        nonce=(request_env.nonce + 1) % NONCE_MODULUS,
        timestamp=now,
        payload=body,
    )
