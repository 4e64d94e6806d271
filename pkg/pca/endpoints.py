from core.endpoints import AuthMode, Endpoint, route
from core.wire import MsgType

from . import services
from .messages import (
    CrlRequest,
    CrlResponse,
    MapPseudonymRequest,
    MapPseudonymResponse,
    OcspRequest,
    OcspResponse,
    PseudonymItem,
    PseudonymRequest,
    PseudonymResponse,
    RevokeTicketRequest,
    RevokeTicketResponse,
)


class PcaEndpoint(Endpoint):
    def __init__(self, authority, peer_crls=None):
        super().__init__(authority)
        self.peer_crls = peer_crls

    @route(MsgType.PSNYM_REQ, request=PseudonymRequest)
    def pseudonyms(self, ctx, body):
        outcomes = services.issue_pseudonyms(self.authority, body.rnd, body.interval, body.ticket, body.csrs)
        return PseudonymResponse(tuple(
            PseudonymItem(o.pseudonym) if o.ok else PseudonymItem(None, o.error.code, o.error.message)
            for o in outcomes
        ))

    @route(MsgType.CRL_REQ, request=CrlRequest)
    def crl(self, ctx, body):
        return CrlResponse(services.get_crl(self.authority, body.since_sequence))

    @route(MsgType.OCSP_REQ, request=OcspRequest)
    def ocsp(self, ctx, body):
        status = services.ocsp_check(
            self.authority, body.query_serial, body.requester, body.proof,
            ctx.envelope.nonce, ctx.envelope.timestamp, peer_crls=self.peer_crls,
        )
        return OcspResponse(body.query_serial, status)

    @route(MsgType.RESOLVE_STEP_REQ, request=MapPseudonymRequest, mode=AuthMode.MUTUAL)
    def map_pseudonym(self, ctx, body):
        issuer, serial = services.map_pseudonym(self.authority, body.serial, ctx.client_key)
        return MapPseudonymResponse(issuer, serial)

    @route(MsgType.REVOKE_REQ, request=RevokeTicketRequest, mode=AuthMode.MUTUAL)
    def revoke(self, ctx, body):
        count = services.revoke_for_ticket(self.authority, body.ticket_issuer, body.ticket_serial, ctx.client_key)
        return RevokeTicketResponse(count)
