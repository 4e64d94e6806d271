from core.endpoints import AuthMode, Endpoint, route
from core.exceptions import Unauthorized
from core.wire import MsgType

from . import services
from .messages import (
    ForeignTicketRequest,
    LtcResponse,
    RegisterRequest,
    ResolveTicketRequest,
    ResolveTicketResponse,
    RevokeLtcRequest,
    RevokeResponse,
    TicketRequest,
    TicketResponse,
    UpdateLtcRequest,
)


class LtcaEndpoint(Endpoint):
    # ftkt_req é só um apelido: a LTCA de origem não distingue ticket nativo de estrangeiro.
    @route(MsgType.TICKET_REQ, MsgType.FTKT_REQ, request=TicketRequest, mode=AuthMode.MUTUAL)
    def ticket(self, ctx, body):
        ticket = services.issue_ticket(
            self.authority, body.target_digest, body.interval, body.ltc, peer_key=ctx.client_key
        )
        return TicketResponse(ticket)

    @route(MsgType.NTKT_REQ, request=ForeignTicketRequest)
    def exchange(self, ctx, body):
        ticket = services.exchange_foreign_ticket(
            self.authority, body.f_ticket, body.rnd, body.target_digest, body.interval
        )
        return TicketResponse(ticket)

    @route(MsgType.RESOLVE_STEP_REQ, request=ResolveTicketRequest, mode=AuthMode.MUTUAL)
    def resolve(self, ctx, body):
        found = services.resolve_ticket(self.authority, body.ticket_serial, ctx.client_key)
        return ResolveTicketResponse(found.subject_id, found.home_issuer, found.foreign_serial)

    @route(MsgType.REVOKE_REQ, request=RevokeLtcRequest, mode=AuthMode.MUTUAL)
    def revoke(self, ctx, body):
        return RevokeResponse(services.revoke_ltc(self.authority, body.subject_id, ctx.client_key))

    @route(MsgType.REG_REQ, request=RegisterRequest)
    def register(self, ctx, body):
        return LtcResponse(services.register_vehicle(self.authority, body.csr, body.subject_id, body.validity))

    @route(MsgType.UPDATE_LTC_REQ, request=UpdateLtcRequest, mode=AuthMode.MUTUAL)
    def update(self, ctx, body):
        if ctx.client_key != body.old_ltc.public_key:
            raise Unauthorized("atualização exige o canal autenticado com o LTC antigo")
        return LtcResponse(services.update_ltc(self.authority, body.old_ltc, body.csr))
