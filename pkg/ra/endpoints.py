from core.endpoints import AuthMode, Endpoint, route
from core.exceptions import ForeignUnreachable, Unauthorized
from core.wire import MsgType

from . import services
from .messages import ResolutionRequest, ResolutionResponse
from .models import OperatorKey


class RaEndpoint(Endpoint):
    """Recebe pedidos de resolução assinados com a chave de um operador cadastrado."""

    def __init__(self, authority, transport):
        super().__init__(authority)
        self.transport = transport

    def _operator(self, client_key):
        key = OperatorKey.objects.select_related('user').filter(public_key=client_key).first()
        if key is None:
            raise Unauthorized("chave não pertence a nenhum operador da RA")
        return key.user

    @route(MsgType.RESOLVE_REQ, request=ResolutionRequest, mode=AuthMode.MUTUAL)
    def resolve(self, ctx, body):
        operator = self._operator(ctx.client_key)
        try:
            found = services.resolve(self.authority, self.transport, body, operator)
        except PermissionError as exc:
            raise Unauthorized(str(exc)) from exc
        except ForeignUnreachable as exc:
            return ResolutionResponse(None, exc.home_issuer, partial=True, foreign_serial=exc.foreign_serial)
        return ResolutionResponse(found.subject_id, found.home_ltca,
                                  pseudonyms_revoked=found.pseudonyms_revoked, ltc_revoked=found.ltc_revoked)
