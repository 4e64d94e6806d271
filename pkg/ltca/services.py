import logging
from dataclasses import dataclass

from django.db import IntegrityError, transaction

from core import crypto
from core.authority import Authority
from core.credentials import (
    Csr,
    Interval,
    LongTermCertificate,
    Ticket,
    ValidationResult,
    sign_credential,
    validate_chain,
    verify_pop,
)
from core.exceptions import (
    BadProofOfPossession,
    BadSignature,
    DuplicateSubject,
    IntervalViolation,
    MalformedRequest,
    OverlappingTicket,
    RevokedCredential,
    TicketBindingMismatch,
    TicketInvalid,
    TicketReused,
    Unauthorized,
    UnknownIssuer,
    UnknownSubject,
    UnknownTicket,
)

from .models import ForeignTicketExchange, IssuedLtc, TicketLedgerEntry, VehicleRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TicketResolution:
    """Resultado de `resolve_ticket`: identidade local ou ponteiro para a LTCA de origem."""

    subject_id: str | None = None
    home_issuer: str | None = None
    foreign_serial: int | None = None

    @property
    def is_foreign(self) -> bool:
        return self.subject_id is None


def _issue_ltc(ltca: Authority, vehicle: VehicleRecord, public_key: bytes, validity: Interval, now: int):
    serial = ltca.next_serial('ltc')
    ltc = sign_credential(
        LongTermCertificate(serial, vehicle.subject_id, public_key, validity, ltca.ca_id),
        ltca.keypair,
    )
    IssuedLtc.objects.create(
        authority=ltca.ca_id,
        vehicle=vehicle,
        serial=serial,
        public_key=public_key,
        validity_start=validity.start,
        validity_end=validity.end,
        current=True,
        issued_at=now,
    )
    return ltc


def register_vehicle(ltca: Authority, csr: Csr, subject_id: str, validity: Interval) -> LongTermCertificate:
    """
    Registra um veículo novo e emite seu LTC.

    :raises BadProofOfPossession: se o CSR não prova posse da chave.
    :raises DuplicateSubject: se o `subject_id` já está registrado nesta LTCA.
    """
    if not verify_pop(csr):
        raise BadProofOfPossession()
    now = ltca.now()
    try:
        with transaction.atomic():
            if VehicleRecord.objects.filter(authority=ltca.ca_id, subject_id=subject_id).exists():
                raise DuplicateSubject(f"{subject_id} já registrado em {ltca.ca_id}")
            vehicle = VehicleRecord.objects.create(authority=ltca.ca_id, subject_id=subject_id, registered_at=now)
            ltc = _issue_ltc(ltca, vehicle, csr.public_key, validity, now)
    except IntegrityError as exc:
        raise DuplicateSubject(f"{subject_id} já registrado em {ltca.ca_id}") from exc
    logger.info("%s registrou %s (LTC %d)", ltca.ca_id, subject_id, ltc.serial)
    return ltc


def _check_ltc(ltca: Authority, ltc: LongTermCertificate, now: int, lock: bool = False):
    """Valida um LTC apresentado e devolve o registro do veículo dono dele."""
    result = validate_chain(ltc, ltca.trust, now)
    if result is ValidationResult.UNKNOWN_ISSUER:
        raise UnknownIssuer(f"LTC emitido por {ltc.issuer}")
    if result is ValidationResult.BAD_SIGNATURE:
        raise BadSignature("assinatura do LTC não confere")
    if result is not ValidationResult.VALID:
        raise Unauthorized(f"LTC fora da validade ({result.value})")
    if ltc.issuer != ltca.ca_id:
        raise UnknownSubject(f"LTC de outra LTCA ({ltc.issuer})")
    issued = IssuedLtc.objects.filter(authority=ltca.ca_id, serial=ltc.serial).first()
    if issued is None:
        raise UnknownSubject(f"LTC {ltc.serial} desconhecido")
    vehicles = VehicleRecord.objects.select_for_update() if lock else VehicleRecord.objects
    vehicle = vehicles.get(pk=issued.vehicle_id)
    if vehicle.subject_id != ltc.subject_id or bytes(issued.public_key) != ltc.public_key:
        raise BadSignature("LTC não corresponde ao registro")
    if vehicle.revoked:
        raise RevokedCredential(f"{vehicle.subject_id} revogado")
    if not issued.current:
        raise RevokedCredential(f"LTC {ltc.serial} foi substituído")
    return vehicle, issued


def update_ltc(ltca: Authority, old_ltc: LongTermCertificate, csr: Csr, validity: Interval | None = None):
    """
    Emite um LTC novo para a chave do CSR. O antigo vai para o histórico:
    continua resolvível, mas não serve mais para pedir tickets. Tickets já
    emitidos continuam válidos.
    """
    now = ltca.now()
    with transaction.atomic():
        vehicle, issued = _check_ltc(ltca, old_ltc, now, lock=True)
        if not verify_pop(csr):
            raise BadProofOfPossession()
        IssuedLtc.objects.filter(pk=issued.pk).update(current=False)
        ltc = _issue_ltc(ltca, vehicle, csr.public_key, validity or old_ltc.validity, now)
    logger.info("%s atualizou o LTC de %s (%d -> %d)", ltca.ca_id, vehicle.subject_id, old_ltc.serial, ltc.serial)
    return ltc


def _current_periods(requested: Interval, now: int, policy) -> Interval:
    """
    Expande o pedido para a grade Γ e corta os períodos que já terminaram:
    um ticket nunca cobre tempo que passou.
    """
    gamma = policy.ticket_interval_seconds
    snapped = requested.snap_outward(gamma, policy.grid_epoch)
    current = policy.grid_epoch + ((now - policy.grid_epoch) // gamma) * gamma
    if snapped.end <= current:
        raise IntervalViolation(f"[{requested.start}, {requested.end}) já passou")
    return Interval(max(snapped.start, current), snapped.end)


def issue_ticket(
    ltca: Authority,
    digest: bytes,
    requested: Interval,
    ltc: LongTermCertificate,
    *,
    peer_key: bytes,
) -> Ticket:
    """
    Emite um ticket anonimizado para o veículo dono de `ltc`.

    O intervalo pedido é expandido para a grade Γ, sem os períodos que já
    terminaram. A checagem de sobreposição com o ledger e a inserção
    acontecem na mesma transação: é isso que impede um veículo de ter dois
    tickets não expirados cobrindo o mesmo instante. A LTCA não sabe se
    `digest` esconde uma PCA ou uma LTCA estrangeira.

    :raises Unauthorized: se o canal não foi autenticado com a chave do LTC.
    :raises OverlappingTicket: pedido sobreposto (tentativa Sybil ou duplicada).
    :raises RevokedCredential: LTC revogado ou substituído.
    :raises IntervalViolation: pedido inteiro em períodos já terminados.
    """
    if len(digest) != crypto.DIGEST_SIZE:
        raise MalformedRequest("digest de destino precisa de 32 bytes")
    if peer_key != ltc.public_key:
        raise Unauthorized("canal não autenticado com a chave do LTC")
    policy = ltca.policy
    now = ltca.now()
    snapped = _current_periods(requested, now, policy)
    with transaction.atomic():
        vehicle, _issued = _check_ltc(ltca, ltc, now, lock=True)
        overlapping = TicketLedgerEntry.objects.filter(
            vehicle=vehicle,
            expires_at__gt=now,
            interval_start__lt=snapped.end,
            interval_end__gt=snapped.start,
        ).exists()
        if overlapping:
            logger.warning(
                "%s recusou ticket sobreposto para %s em [%d, %d)",
                ltca.ca_id, vehicle.subject_id, snapped.start, snapped.end,
            )
            raise OverlappingTicket()
        serial = ltca.next_serial('ticket')
        ticket = sign_credential(
            Ticket(serial, bytes(digest), snapped, snapped.end, ltca.ca_id),
            ltca.keypair,
        )
        TicketLedgerEntry.objects.create(
            authority=ltca.ca_id,
            ticket_serial=serial,
            vehicle=vehicle,
            interval_start=snapped.start,
            interval_end=snapped.end,
            target_digest=bytes(digest),
            issued_at=now,
            expires_at=ticket.tkt_expiry,
        )
    logger.info("%s emitiu ticket %d para %s", ltca.ca_id, serial, vehicle.subject_id)
    return ticket


def exchange_foreign_ticket(
    ltca: Authority,
    f_tkt: Ticket,
    rnd: bytes,
    digest_pca: bytes,
    requested: Interval,
) -> Ticket:
    """
    Troca um ticket estrangeiro (emitido pela LTCA de origem do veículo) por um
    ticket nativo deste domínio, destinado à PCA escondida em `digest_pca`.

    :raises TicketBindingMismatch: `rnd` não abre o digest do f-tkt para esta LTCA.
    :raises TicketReused: f-tkt já trocado aqui.
    :raises IntervalViolation: intervalo pedido fora do f-tkt.
    :raises UnknownIssuer: f-tkt de emissor fora do trust store.
    """
    if len(digest_pca) != crypto.DIGEST_SIZE or len(rnd) != crypto.RND_SIZE:
        raise MalformedRequest("digest e Rnd precisam de 32 bytes")
    now = ltca.now()
    result = validate_chain(f_tkt, ltca.trust, now)
    if result is ValidationResult.UNKNOWN_ISSUER:
        raise UnknownIssuer(f"ticket emitido por {f_tkt.issuer}")
    if result is ValidationResult.BAD_SIGNATURE:
        raise BadSignature("assinatura do ticket estrangeiro não confere")
    if result is ValidationResult.EXPIRED:
        raise TicketInvalid("ticket estrangeiro expirado")
    if f_tkt.issuer == ltca.ca_id:
        raise TicketInvalid("ticket emitido por esta própria LTCA")
    if crypto.hash_bind(ltca.ca_id, rnd) != f_tkt.target_digest:
        raise TicketBindingMismatch()
    if not requested.within(f_tkt.interval):
        raise IntervalViolation()

    policy = ltca.policy
    snapped = requested.snap_outward(policy.ticket_interval_seconds, policy.grid_epoch)
    interval = Interval(max(snapped.start, f_tkt.interval.start), min(snapped.end, f_tkt.interval.end))
    try:
        with transaction.atomic():
            serial = ltca.next_serial('ticket')
            ForeignTicketExchange.objects.create(
                authority=ltca.ca_id,
                ticket_serial=serial,
                ftkt_issuer=f_tkt.issuer,
                ftkt_serial=f_tkt.serial,
                interval_start=interval.start,
                interval_end=interval.end,
                target_digest=bytes(digest_pca),
                issued_at=now,
            )
    except IntegrityError as exc:
        raise TicketReused(f"ticket {f_tkt.issuer}/{f_tkt.serial} já trocado") from exc
    logger.info("%s trocou f-tkt %s/%d por n-tkt %d", ltca.ca_id, f_tkt.issuer, f_tkt.serial, serial)
    return sign_credential(Ticket(serial, bytes(digest_pca), interval, interval.end, ltca.ca_id), ltca.keypair)


def resolve_ticket(ltca: Authority, ticket_serial: int, ra_key: bytes | None) -> TicketResolution:
    """
    Passo da resolução: ticket -> identidade. Para um ticket trocado devolve
    o ponteiro para a LTCA de origem (um salto a mais para a RA).
    """
    ltca.require_ra(ra_key)
    entry = (
        TicketLedgerEntry.objects.select_related('vehicle')
        .filter(authority=ltca.ca_id, ticket_serial=ticket_serial)
        .first()
    )
    if entry is not None:
        logger.info("%s resolveu ticket %d", ltca.ca_id, ticket_serial)
        return TicketResolution(subject_id=entry.vehicle.subject_id)
    exchange = ForeignTicketExchange.objects.filter(authority=ltca.ca_id, ticket_serial=ticket_serial).first()
    if exchange is not None:
        logger.info("%s resolveu ticket %d para %s", ltca.ca_id, ticket_serial, exchange.ftkt_issuer)
        return TicketResolution(home_issuer=exchange.ftkt_issuer, foreign_serial=exchange.ftkt_serial)
    raise UnknownTicket(f"ticket {ticket_serial} desconhecido em {ltca.ca_id}")


def revoke_ltc(ltca: Authority, subject_id: str, ra_key: bytes | None) -> int:
    """Revoga o veículo. Idempotente: devolve 1 na primeira vez, 0 depois."""
    ltca.require_ra(ra_key)
    vehicle = VehicleRecord.objects.filter(authority=ltca.ca_id, subject_id=subject_id).first()
    if vehicle is None:
        raise UnknownSubject(f"{subject_id} desconhecido em {ltca.ca_id}")
    changed = VehicleRecord.objects.filter(pk=vehicle.pk, revoked=False).update(revoked=True)
    if changed:
        logger.info("%s revogou %s", ltca.ca_id, subject_id)
    return changed
