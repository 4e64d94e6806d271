"""
Resolução pseudônimo -> identidade e revogação.

A RA não guarda nenhuma tabela pseudônimo <-> identidade: cada resolução
percorre os servidores (PCA, LTCA e, para tickets trocados, a LTCA de
origem) e deixa no log de auditoria os passos dados.
"""
import logging
from dataclasses import dataclass, field

from django.db import transaction

from core.authority import Authority
from core.channels import Channel
from core.credentials import Role
from core.exceptions import ForeignUnreachable, ServiceUnavailable, UnknownPseudonym, UnknownTicket, VpkiError
from core.wire import MsgType
from ltca.messages import ResolveTicketRequest, ResolveTicketResponse, RevokeLtcRequest, RevokeResponse
from pca.messages import MapPseudonymRequest, MapPseudonymResponse, RevokeTicketRequest, RevokeTicketResponse

from .messages import ResolutionRequest
from .models import AuditLogEntry

logger = logging.getLogger(__name__)


@dataclass
class Resolution:
    subject_id: str
    home_ltca: str
    pseudonyms_revoked: int = 0
    ltc_revoked: bool = False
    steps: list = field(default_factory=list)


def require_operator(operator, perm: str) -> None:
    if operator is None or not operator.is_active or not operator.has_perm(perm):
        raise PermissionError("Usuário não tem permissão para esta operação da RA.")


class _Hops:
    """Canais mútuos da RA com cada servidor, registrando cada passo."""

    def __init__(self, ra: Authority, transport):
        self.ra = ra
        self.transport = transport
        self.steps = []

    def call(self, server_id: str, role: Role, op: str, msg_type, body, response_cls):
        if not self.ra.trust.has_role(server_id, role):
            raise UnknownTicket(f"{server_id} não é uma {role.name} conhecida")
        channel = Channel(
            self.transport, server_id, self.ra.trust.key_of(server_id), self.ra.clock,
            skew=self.ra.policy.clock_skew_seconds, auth=self.ra.keypair,
        )
        step = {"server": server_id, "op": op}
        self.steps.append(step)
        try:
            result = channel.call(msg_type, body, response_cls)
        except VpkiError as exc:
            step["error"] = type(exc).__name__
            raise
        step["ok"] = True
        return result


def _record(ra, request, operator, outcome, steps, subject_id="", home_ltca="", detail=""):
    with transaction.atomic():
        return AuditLogEntry.objects.create(
            authority=ra.ca_id,
            operator=operator.get_username() if operator is not None else "",
            pseudonym_issuer=request.pseudonym_issuer,
            pseudonym_serial=request.pseudonym_serial,
            justification=request.justification,
            revoke_pseudonyms=request.revoke_pseudonyms,
            revoke_ltc=request.revoke_ltc,
            steps=steps,
            outcome=outcome,
            subject_id=subject_id or "",
            home_ltca=home_ltca or "",
            detail=detail,
            created_at=ra.now(),
        )


def resolve(ra: Authority, transport, request: ResolutionRequest, operator) -> Resolution:
    """
    Passos: pseudônimo -> ticket na PCA; revogação opcional dos pseudônimos
    do ticket; ticket -> identidade na LTCA, com um salto a mais até a LTCA
    de origem quando o ticket foi trocado; revogação opcional do LTC.

    :raises PermissionError: se o operador não pode pedir resoluções; a tentativa
        fica na auditoria como DENIED.
    :raises ForeignUnreachable: LTCA de origem fora do ar; a auditoria fica PARTIAL
        e a exceção carrega o ponteiro (LTCA de origem, serial do f-tkt).
    """
    try:
        require_operator(operator, 'ra.request_resolution')
    except PermissionError as exc:
        _record(ra, request, operator, AuditLogEntry.Outcome.DENIED, [], detail=str(exc))
        logger.warning("%s: resolução de %s/%d negada ao operador %s", ra.ca_id,
                       request.pseudonym_issuer, request.pseudonym_serial,
                       operator.get_username() if operator is not None else "-")
        raise
    hops = _Hops(ra, transport)
    try:
        resolution = _walk(hops, request)
    except ForeignUnreachable as exc:
        _record(ra, request, operator, AuditLogEntry.Outcome.PARTIAL, hops.steps,
                home_ltca=exc.home_issuer, detail=str(exc))
        logger.warning("%s: resolução parcial de %s/%d, origem %s fora do ar",
                       ra.ca_id, request.pseudonym_issuer, request.pseudonym_serial, exc.home_issuer)
        raise
    except VpkiError as exc:
        _record(ra, request, operator, AuditLogEntry.Outcome.FAILED, hops.steps,
                detail=f"{type(exc).__name__}: {exc}")
        raise
    resolution.steps = hops.steps
    _record(ra, request, operator, AuditLogEntry.Outcome.OK, hops.steps,
            subject_id=resolution.subject_id, home_ltca=resolution.home_ltca)
    logger.info("%s resolveu %s/%d em %d passos (operador %s)", ra.ca_id, request.pseudonym_issuer,
                request.pseudonym_serial, len(hops.steps), operator.get_username())
    return resolution


def _walk(hops: _Hops, request: ResolutionRequest) -> Resolution:
    pca_id = request.pseudonym_issuer
    if not hops.ra.trust.has_role(pca_id, Role.PCA):
        raise UnknownPseudonym(f"{pca_id} não é uma PCA conhecida")
    mapped = hops.call(pca_id, Role.PCA, "map_psnym", MsgType.RESOLVE_STEP_REQ,
                       MapPseudonymRequest(request.pseudonym_serial), MapPseudonymResponse)
    revoked = 0
    if request.revoke_pseudonyms:
        revoked = hops.call(pca_id, Role.PCA, "revoke_ticket", MsgType.REVOKE_REQ,
                            RevokeTicketRequest(mapped.ticket_issuer, mapped.ticket_serial),
                            RevokeTicketResponse).count
    found = hops.call(mapped.ticket_issuer, Role.LTCA, "resolve_ticket", MsgType.RESOLVE_STEP_REQ,
                      ResolveTicketRequest(mapped.ticket_serial), ResolveTicketResponse)
    home = mapped.ticket_issuer
    if found.subject_id is None:
        home = found.home_issuer
        try:
            found = hops.call(home, Role.LTCA, "resolve_ticket", MsgType.RESOLVE_STEP_REQ,
                              ResolveTicketRequest(found.foreign_serial), ResolveTicketResponse)
        except ServiceUnavailable as exc:
            raise ForeignUnreachable(str(exc), home_issuer=home, foreign_serial=found.foreign_serial) from exc
        if found.subject_id is None:
            raise UnknownTicket("ticket trocado aponta para outro ticket trocado")
    ltc_revoked = False
    if request.revoke_ltc:
        ltc_revoked = bool(hops.call(home, Role.LTCA, "revoke_ltc", MsgType.REVOKE_REQ,
                                     RevokeLtcRequest(found.subject_id), RevokeResponse).count)
    return Resolution(found.subject_id, home, revoked, ltc_revoked)


def audit_log(ra: Authority, since: int, operator) -> list[AuditLogEntry]:
    require_operator(operator, 'ra.view_auditlogentry')
    return list(AuditLogEntry.objects.filter(authority=ra.ca_id, created_at__gte=since))
