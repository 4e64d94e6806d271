import logging
from dataclasses import dataclass

from django.db import IntegrityError, transaction
from django.db.models import Max

from core import crypto
from core.authority import Authority
from core.credentials import (
    Csr,
    Interval,
    Pseudonym,
    RevocationList,
    Ticket,
    ValidationResult,
    sign_credential,
    validate_chain,
    verify_pop,
)
from core.encoding import canonical_encode
from core.exceptions import (
    BadProofOfPossession,
    BatchTooLarge,
    EmptyRequest,
    IntervalViolation,
    MalformedRequest,
    MaliciousRequester,
    NoSlot,
    TicketBindingMismatch,
    TicketInvalid,
    TicketReused,
    Unauthorized,
    UnknownPseudonym,
    UnknownTicket,
    VpkiError,
)

from .messages import CertStatus, OcspChallenge
from .models import CrlPublication, IssuedPseudonym, RevokedPseudonym, TicketUsage

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PseudonymOutcome:
    pseudonym: Pseudonym | None = None
    error: VpkiError | None = None

    @property
    def ok(self) -> bool:
        return self.pseudonym is not None


def align_lifetimes(requested: Interval, tau: int, grid_epoch: int = 0) -> list[Interval]:
    """
    Slots [kτ, (k+1)τ) da grade que intersectam o intervalo pedido.

    Todos os veículos que pedem o mesmo período recebem exatamente os mesmos
    slots: as trocas de pseudônimo acontecem nos mesmos instantes.
    """
    if requested.start < grid_epoch:
        raise IntervalViolation("intervalo começa antes do epoch da grade")
    closure = requested.snap_outward(tau, grid_epoch)
    slots = [Interval(t, t + tau) for t in range(closure.start, closure.end, tau)]
    slots = [s for s in slots if s.overlaps(requested)]
    if not slots:
        raise EmptyRequest()
    return slots


def _check_ticket(pca: Authority, rnd: bytes, requested: Interval, tkt: Ticket, now: int) -> None:
    result = validate_chain(tkt, pca.trust, now)
    # Ticket ainda não iniciado é aceito: o veículo pode buscar pseudônimos com antecedência.
    if result not in (ValidationResult.VALID, ValidationResult.NOT_YET_VALID):
        raise TicketInvalid(f"ticket {tkt.issuer}/{tkt.serial}: {result.value}")
    if now > tkt.tkt_expiry:
        raise TicketInvalid("ticket apresentado depois de tkt_expiry")
    if crypto.hash_bind(pca.ca_id, rnd) != tkt.target_digest:
        raise TicketBindingMismatch()
    policy = pca.policy
    if requested.start < policy.grid_epoch:
        raise IntervalViolation("intervalo começa antes do epoch da grade")
    if requested.end <= now:
        raise IntervalViolation(f"[{requested.start}, {requested.end}) já passou")
    closure = requested.snap_outward(policy.pseudonym_lifetime_seconds, policy.grid_epoch)
    if not closure.within(tkt.interval):
        raise IntervalViolation(
            f"[{closure.start}, {closure.end}) fora do ticket [{tkt.interval.start}, {tkt.interval.end})"
        )


def _mark_used(pca: Authority, tkt: Ticket, now: int) -> TicketUsage:
    # Transação própria e já confirmada: um pedido abortado depois daqui queima o ticket.
    try:
        with transaction.atomic():
            return TicketUsage.objects.create(
                authority=pca.ca_id,
                ticket_issuer=tkt.issuer,
                ticket_serial=tkt.serial,
                interval_start=tkt.interval.start,
                interval_end=tkt.interval.end,
                used_at=now,
            )
    except IntegrityError as exc:
        raise TicketReused(f"ticket {tkt.issuer}/{tkt.serial} já usado") from exc


def issue_pseudonyms(
    pca: Authority,
    rnd: bytes,
    requested: Interval,
    tkt: Ticket,
    csrs: list[Csr],
) -> list[PseudonymOutcome]:
    """
    Emite um pseudônimo por CSR válido, em ordem, um por slot da grade.

    Ordem das checagens: lote, ticket, vínculo H(PCA_id || Rnd), intervalo,
    uso único (marcado antes das provas de posse), limiar de PoP, slots.
    CSRs com PoP inválida ou sem slot recebem erro individual.
    Slots que terminam até `now` não são emitidos.

    :raises MaliciousRequester: PoPs inválidas >= limiar; nada é emitido e o ticket fica queimado.
    """
    policy = pca.policy
    if not csrs or len(csrs) > policy.max_batch:
        raise BatchTooLarge(f"{len(csrs)} CSRs (máximo {policy.max_batch})")
    if len(rnd) != crypto.RND_SIZE:
        raise MalformedRequest("Rnd precisa de 32 bytes")
    now = pca.now()
    _check_ticket(pca, rnd, requested, tkt, now)
    usage = _mark_used(pca, tkt, now)

    valid = [verify_pop(csr) for csr in csrs]
    bad = valid.count(False)
    if bad >= policy.pop_failure_threshold:
        logger.warning(
            "%s abortou pedido do ticket %s/%d: %d PoPs inválidas",
            pca.ca_id, tkt.issuer, tkt.serial, bad,
        )
        raise MaliciousRequester()

    # Slots que já terminaram ficam de fora: o pool nunca recebe tempo passado.
    slots = iter([
        s for s in align_lifetimes(requested, policy.pseudonym_lifetime_seconds, policy.grid_epoch)
        if s.end > now
    ])
    assigned = {}
    for index, ok in enumerate(valid):
        if ok:
            slot = next(slots, None)
            if slot is not None:
                assigned[index] = slot

    serials = iter(pca.next_serials('pseudonym', len(assigned)))
    outcomes = []
    rows = []
    for index, csr in enumerate(csrs):
        if not valid[index]:
            outcomes.append(PseudonymOutcome(error=BadProofOfPossession()))
            continue
        if index not in assigned:
            outcomes.append(PseudonymOutcome(error=NoSlot()))
            continue
        slot = assigned[index]
        pseudonym = sign_credential(Pseudonym(next(serials), csr.public_key, slot, pca.ca_id), pca.keypair)
        outcomes.append(PseudonymOutcome(pseudonym=pseudonym))
        rows.append(IssuedPseudonym(
            authority=pca.ca_id,
            serial=pseudonym.serial,
            usage=usage,
            public_key=csr.public_key,
            interval_start=slot.start,
            interval_end=slot.end,
            issued_at=now,
        ))
    with transaction.atomic():
        IssuedPseudonym.objects.bulk_create(rows)
    logger.info(
        "%s emitiu %d pseudônimos para o ticket %s/%d (%d recusados)",
        pca.ca_id, len(rows), tkt.issuer, tkt.serial, len(csrs) - len(rows),
    )
    return outcomes


def revoke_for_ticket(pca: Authority, ticket_issuer: str, ticket_serial: int, ra_key: bytes | None) -> int:
    """
    Revoga todos os pseudônimos ainda válidos emitidos para o ticket e publica
    a CRL seguinte. Sem nada novo para revogar, a CRL não muda.
    """
    pca.require_ra(ra_key)
    now = pca.now()
    usage = TicketUsage.objects.filter(
        authority=pca.ca_id, ticket_issuer=ticket_issuer, ticket_serial=ticket_serial
    ).first()
    if usage is None:
        raise UnknownTicket(f"ticket {ticket_issuer}/{ticket_serial} nunca usado em {pca.ca_id}")
    with transaction.atomic():
        already = RevokedPseudonym.objects.filter(authority=pca.ca_id).values_list('serial', flat=True)
        serials = list(
            usage.pseudonyms.filter(interval_end__gt=now)
            .exclude(serial__in=already)
            .values_list('serial', flat=True)
        )
        if not serials:
            return 0
        last = CrlPublication.objects.filter(authority=pca.ca_id).aggregate(last=Max('sequence'))['last'] or 0
        sequence = last + 1
        RevokedPseudonym.objects.bulk_create([
            RevokedPseudonym(authority=pca.ca_id, serial=s, crl_sequence=sequence, revoked_at=now)
            for s in serials
        ])
        total = RevokedPseudonym.objects.filter(authority=pca.ca_id).count()
        CrlPublication.objects.create(authority=pca.ca_id, sequence=sequence, issued_at=now, entry_count=total)
    logger.info("%s revogou %d pseudônimos do ticket %s/%d (CRL %d)",
                pca.ca_id, len(serials), ticket_issuer, ticket_serial, sequence)
    return len(serials)


def get_crl(pca: Authority, since_sequence: int | None = None) -> RevocationList:
    """
    CRL assinada na sequência atual. Com `since_sequence` conhecida, devolve
    só as entradas novas (delta); sequência desconhecida cai na CRL completa.
    """
    latest = CrlPublication.objects.filter(authority=pca.ca_id).order_by('-sequence').first()
    sequence = latest.sequence if latest else 0
    issued_at = latest.issued_at if latest else pca.now()
    revoked = RevokedPseudonym.objects.filter(authority=pca.ca_id, crl_sequence__lte=sequence)
    delta = since_sequence is not None and since_sequence <= sequence
    if delta:
        revoked = revoked.filter(crl_sequence__gt=since_sequence)
    entries = tuple(sorted(revoked.values_list('serial', flat=True)))
    crl = RevocationList(
        issuer=pca.ca_id,
        sequence=sequence,
        issued_at=issued_at,
        entries=entries,
        delta=delta,
        since_sequence=since_sequence if delta else 0,
    )
    return sign_credential(crl, pca.keypair)


def ocsp_check(
    pca: Authority,
    query_serial: int,
    requester: Pseudonym,
    proof: bytes,
    nonce: int,
    timestamp: int,
    *,
    peer_crls=None,
) -> CertStatus:
    """
    Estado de um pseudônimo desta PCA. O solicitante se autentica com um
    pseudônimo corrente, válido e não revogado, assinando o desafio.

    Pseudônimo de outra PCA é conferido na CRL da emissora (`peer_crls`);
    sem ela o solicitante é recusado.
    """
    now = pca.now()
    if validate_chain(requester, pca.trust, now) is not ValidationResult.VALID:
        raise Unauthorized("pseudônimo do solicitante inválido ou fora da validade")
    if requester.issuer == pca.ca_id:
        revoked = RevokedPseudonym.objects.filter(authority=pca.ca_id, serial=requester.serial).exists()
    elif peer_crls is None:
        raise Unauthorized(f"sem acesso à CRL de {requester.issuer}")
    else:
        revoked = peer_crls.is_revoked(requester.issuer, requester.serial)
    if revoked:
        raise Unauthorized("pseudônimo do solicitante revogado")
    challenge = canonical_encode(OcspChallenge(query_serial, nonce, timestamp))
    if not crypto.verify(requester.public_key, challenge, proof):
        raise Unauthorized("prova do solicitante não confere")
    if RevokedPseudonym.objects.filter(authority=pca.ca_id, serial=query_serial).exists():
        return CertStatus.REVOKED
    if IssuedPseudonym.objects.filter(authority=pca.ca_id, serial=query_serial).exists():
        return CertStatus.GOOD
    return CertStatus.UNKNOWN


def map_pseudonym(pca: Authority, serial: int, ra_key: bytes | None) -> tuple[str, int]:
    """Passo da resolução: pseudônimo -> (LTCA emissora do ticket, serial do ticket)."""
    pca.require_ra(ra_key)
    row = IssuedPseudonym.objects.select_related('usage').filter(authority=pca.ca_id, serial=serial).first()
    if row is None:
        raise UnknownPseudonym(f"pseudônimo {serial} desconhecido em {pca.ca_id}")
    logger.info("%s mapeou pseudônimo %d", pca.ca_id, serial)
    return row.usage.ticket_issuer, row.usage.ticket_serial
