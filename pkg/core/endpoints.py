"""
Despacho de mensagens do lado servidor.

Cada serviço declara um `Endpoint` com métodos marcados por `@route`. O
fluxo de toda troca é o mesmo:

    deframe -> rota -> autenticação do canal -> frescor -> decode -> handler
    -> resposta N+1 assinada

Qualquer `VpkiError` vira uma resposta `err` assinada como as demais.
"""
import enum
import logging
from dataclasses import dataclass

from . import crypto
from .channels import WireRequest, WireResponse
from .encoding import canonical_decode, canonical_encode
from .exceptions import (
    DecodeError,
    FrameError,
    MalformedRequest,
    ServiceError,
    Unauthorized,
    UnsupportedMessage,
    VpkiError,
)
from .messages import ErrorBody
from .wire import Envelope, MsgType, deframe, ensure_fresh, frame, respond

logger = logging.getLogger(__name__)


class AuthMode(enum.Enum):
    MUTUAL = "mutual"
    SERVER_ONLY = "server_only"


@dataclass(frozen=True)
class Route:
    msg_type: int
    request_cls: type
    mode: AuthMode
    handler: str


@dataclass(frozen=True)
class CallContext:
    envelope: Envelope
    client_key: crypto.PublicKey | None
    now: int


def route(*msg_types: int, request: type, mode: AuthMode = AuthMode.SERVER_ONLY):
    def decorator(func):
        func._vpki_routes = tuple((t, request, mode) for t in msg_types)
        return func

    return decorator


class Endpoint:
    def __init__(self, authority):
        self.authority = authority
        self.routes: dict[int, Route] = {}
        for name in dir(type(self)):
            func = getattr(type(self), name)
            for msg_type, request_cls, mode in getattr(func, '_vpki_routes', ()):
                self.routes[msg_type] = Route(msg_type, request_cls, mode, name)

    @property
    def ca_id(self) -> str:
        return self.authority.ca_id

    def __call__(self, request: WireRequest) -> WireResponse:
        return self.handle(request)

    def handle(self, request: WireRequest) -> WireResponse:
        now = self.authority.now()
        try:
            env = deframe(request.frame)
        except FrameError as exc:
            return self._error(Envelope(MsgType.ERR, 0, now), exc)
        try:
            body, ctx, handler = self._admit(request, env, now)
            result = handler(ctx, body)
            return self._sign(respond(env, canonical_encode(result), self.authority.now()))
        except VpkiError as exc:
            logger.info("%s rejeitou 0x%04x: %s (%s)", self.ca_id, env.msg_type, type(exc).__name__, exc)
            return self._error(env, exc)
        except Exception:
            logger.exception("%s: falha inesperada ao tratar 0x%04x", self.ca_id, env.msg_type)
            return self._error(env, ServiceError())

    def _admit(self, request: WireRequest, env: Envelope, now: int):
        spec = self.routes.get(env.msg_type)
        if spec is None:
            raise UnsupportedMessage(f"{self.ca_id} não atende 0x{env.msg_type:04x}")
        client_key = request.client_key
        if spec.mode is AuthMode.MUTUAL:
            if client_key is None or not crypto.verify(client_key, request.frame, request.client_proof or b""):
                raise Unauthorized("canal mútuo exige prova assinada pelo cliente")
        else:
            client_key = None
        ensure_fresh(env, now, self.authority.nonce_cache, self.authority.policy.clock_skew_seconds)
        try:
            body = canonical_decode(env.payload, spec.request_cls)
        except DecodeError as exc:
            raise MalformedRequest(str(exc)) from exc
        return body, CallContext(env, client_key, now), getattr(self, spec.handler)

    def _error(self, env: Envelope, exc: VpkiError) -> WireResponse:
        body = canonical_encode(ErrorBody(exc.code, exc.message[:1024]))
        return self._sign(respond(env, body, self.authority.now(), msg_type=MsgType.ERR))

    def _sign(self, env: Envelope) -> WireResponse:
        raw = frame(env)
        return WireResponse(frame=raw, server_signature=self.authority.sign(raw))
