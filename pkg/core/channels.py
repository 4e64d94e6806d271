"""
Contrato de canal autenticado e seus bindings.

Uma troca é sempre um `WireRequest` seguido de um `WireResponse`:

- no modo mútuo o cliente assina os bytes exatos do frame com a chave da
  credencial com que se autentica (LTC para tickets, chave da RA nas
  resoluções) e envia a chave pública junto;
- toda resposta é assinada pela chave do servidor e verificada pelo cliente
  contra o trust store.

`LocalTransport` liga os serviços no mesmo processo (harness e testes) e
permite capturar bytes e derrubar servidores. `HttpTransport` fala com
`POST /wire/<ca_id>/` servido pelo Django.
"""
import logging
import threading
from dataclasses import dataclass, field

import requests

from . import crypto
from .encoding import canonical_decode, canonical_encode
from .exceptions import DecodeError, FrameError, ResponseInvalid, ServiceUnavailable, error_from_code
from .messages import ErrorBody
from .wire import NONCE_MODULUS, Envelope, MsgType, deframe, frame, response_type

logger = logging.getLogger(__name__)

CLIENT_KEY_HEADER = "X-Vpki-Client-Key"
CLIENT_PROOF_HEADER = "X-Vpki-Client-Proof"
SERVER_SIGNATURE_HEADER = "X-Vpki-Server-Signature"


@dataclass(frozen=True)
class WireRequest:
    frame: bytes
    client_key: crypto.PublicKey | None = None
    client_proof: crypto.Signature | None = None


@dataclass(frozen=True)
class WireResponse:
    frame: bytes
    server_signature: crypto.Signature


@dataclass(frozen=True)
class CapturedExchange:
    server_id: str
    request: bytes
    response: bytes | None


class LocalTransport:
    def __init__(self):
        self._handlers = {}
        self._down = set()
        self._lock = threading.Lock()
        self._capturing = False
        self._captured: list[CapturedExchange] = []

    def bind(self, server_id: str, handler) -> None:
        with self._lock:
            self._handlers[server_id] = handler
            self._down.discard(server_id)

    def unbind(self, server_id: str) -> None:
        with self._lock:
            self._handlers.pop(server_id, None)

    def crash(self, server_id: str) -> None:
        """Simula um kill do processo: toda troca seguinte falha."""
        with self._lock:
            self._down.add(server_id)
        logger.warning("servidor %s derrubado", server_id)

    def restore(self, server_id: str) -> None:
        with self._lock:
            self._down.discard(server_id)

    def is_up(self, server_id: str) -> bool:
        with self._lock:
            return server_id in self._handlers and server_id not in self._down

    def start_capture(self) -> None:
        with self._lock:
            self._capturing = True
            self._captured = []

    def captured(self, server_id: str | None = None) -> list[CapturedExchange]:
        with self._lock:
            return [c for c in self._captured if server_id is None or c.server_id == server_id]

    def exchange(self, server_id: str, request: WireRequest) -> WireResponse:
        with self._lock:
            handler = self._handlers.get(server_id)
            down = server_id in self._down
        if handler is None or down:
            self._record(server_id, request, None)
            raise ServiceUnavailable(f"{server_id} não responde")
        response = handler(request)
        self._record(server_id, request, response)
        return response

    def _record(self, server_id, request, response):
        if not self._capturing:
            return
        raw = request.frame + (request.client_key or b"") + (request.client_proof or b"")
        with self._lock:
            self._captured.append(CapturedExchange(server_id, raw, response.frame if response else None))


class HttpTransport:
    def __init__(self, addresses: dict[str, str], timeout: float = 10.0, session: requests.Session | None = None):
        self.addresses = dict(addresses)
        self.timeout = timeout
        self.session = session or requests.Session()

    def exchange(self, server_id: str, request: WireRequest) -> WireResponse:
        base = self.addresses.get(server_id)
        if base is None:
            raise ServiceUnavailable(f"endereço de {server_id} desconhecido")
        headers = {"Content-Type": "application/octet-stream"}
        if request.client_key is not None:
            headers[CLIENT_KEY_HEADER] = request.client_key.hex()
        if request.client_proof is not None:
            headers[CLIENT_PROOF_HEADER] = request.client_proof.hex()
        try:
            reply = self.session.post(
                f"{base.rstrip('/')}/wire/{server_id}/", data=request.frame, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise ServiceUnavailable(f"{server_id}: {exc}") from exc
        if reply.status_code != 200:
            raise ServiceUnavailable(f"{server_id} respondeu HTTP {reply.status_code}")
        try:
            signature = bytes.fromhex(reply.headers.get(SERVER_SIGNATURE_HEADER, ""))
        except ValueError as exc:
            raise ResponseInvalid("assinatura do servidor malformada") from exc
        return WireResponse(frame=reply.content, server_signature=signature)


@dataclass
class Channel:
    """
    Lado cliente de uma troca. `auth` presente = modo mútuo.
    Só aceita respostas com nonce N+1, timestamp na janela e assinatura do
    servidor esperado; respostas `err` viram a exceção correspondente.
    """

    transport: object
    server_id: str
    server_key: crypto.PublicKey
    clock: object
    skew: int = 300
    auth: crypto.KeyPair | None = field(default=None, repr=False)

    def call(self, msg_type: int, body, response_cls, *, nonce: int | None = None, timestamp: int | None = None):
        request_env = Envelope(
            msg_type=msg_type,
            nonce=crypto.random_nonce() if nonce is None else nonce,
            timestamp=self.clock.now() if timestamp is None else timestamp,
            payload=canonical_encode(body),
        )
        raw = frame(request_env)
        if self.auth is not None:
            request = WireRequest(raw, self.auth.public, self.auth.sign(raw))
        else:
            request = WireRequest(raw)
        response = self.transport.exchange(self.server_id, request)
        return self._accept(request_env, response, response_cls)

    def _accept(self, request_env: Envelope, response: WireResponse, response_cls):
        if not crypto.verify(self.server_key, response.frame, response.server_signature):
            raise ResponseInvalid(f"assinatura de {self.server_id} não confere")
        try:
            env = deframe(response.frame)
        except FrameError as exc:
            raise ResponseInvalid(str(exc)) from exc
        if env.nonce != (request_env.nonce + 1) % NONCE_MODULUS:
            raise ResponseInvalid("nonce da resposta não é N+1")
        if abs(env.timestamp - self.clock.now()) > self.skew:
            raise ResponseInvalid("timestamp da resposta fora da janela")
        if env.msg_type == MsgType.ERR:
            err = self._decode(env.payload, ErrorBody)
            raise error_from_code(err.code, err.message)
        if env.msg_type != response_type(request_env.msg_type):
            raise ResponseInvalid(f"tipo de resposta inesperado 0x{env.msg_type:04x}")
        return self._decode(env.payload, response_cls)

    @staticmethod
    def _decode(payload, cls):
        try:
            return canonical_decode(payload, cls)
        except DecodeError as exc:
            raise ResponseInvalid(f"corpo da resposta malformado: {exc}") from exc
