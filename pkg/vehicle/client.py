"""
Cliente embarcado: LTC, tickets, pool de pseudônimos, CRL e OCSP.

Um `VehicleClient` é usado por uma thread de cada vez. O que ele manda para
cada servidor segue a separação de conhecimento do protocolo: a LTCA nunca
recebe o id da PCA (só o digest) nem o subintervalo dos pseudônimos, e a PCA
nunca recebe o LTC.
"""
import logging
from dataclasses import dataclass, field

from core import crypto
from core.channels import Channel
from core.credentials import (
    Interval,
    LongTermCertificate,
    Pseudonym,
    Role,
    Ticket,
    TrustStore,
    ValidationResult,
    make_csr,
    signature_valid,
    validate_chain,
)
from core.encoding import canonical_encode
from core.exceptions import (
    IntervalViolation,
    MaliciousRequester,
    MismatchedResponse,
    ResponseInvalid,
    ServiceUnavailable,
    TicketBindingMismatch,
    TicketInvalid,
    TicketReused,
    Unauthorized,
    UnknownIssuer,
)
from core.policy import DomainPolicy
from core.wire import MsgType
from ltca.messages import (
    ForeignTicketRequest,
    LtcResponse,
    RegisterRequest,
    TicketRequest,
    TicketResponse,
    UpdateLtcRequest,
)
from pca.messages import (
    CertStatus,
    CrlRequest,
    CrlResponse,
    OcspChallenge,
    OcspRequest,
    OcspResponse,
    PseudonymRequest,
    PseudonymResponse,
)
from pca.services import align_lifetimes

logger = logging.getLogger(__name__)

_USABLE = (ValidationResult.VALID, ValidationResult.NOT_YET_VALID)


@dataclass(frozen=True)
class PoolEntry:
    keypair: crypto.KeyPair = field(repr=False)
    pseudonym: Pseudonym


@dataclass(frozen=True)
class HeldTicket:
    """Ticket guardado junto com o Rnd que abre o digest para `target`."""

    ticket: Ticket
    rnd: bytes = field(repr=False)
    target: str = field(repr=False)


@dataclass(frozen=True)
class IssuanceEvent:
    """O que um observador veria do pseudônimo, mais o dono verdadeiro (só para pontuação)."""

    serial: int
    issuer: str
    interval: Interval
    subject_id: str


@dataclass
class CrlCache:
    sequence: int
    issued_at: int
    entries: set = field(default_factory=set)


class VehicleClient:
    def __init__(
        self,
        subject_id: str,
        home_ltca: str,
        transport,
        trust: TrustStore,
        clock,
        *,
        policy: DomainPolicy | None = None,
        keypair: crypto.KeyPair | None = None,
        ltc: LongTermCertificate | None = None,
        policies: dict[str, DomainPolicy] | None = None,
        directory=None,
    ):
        self.subject_id = subject_id
        self.home_ltca = home_ltca
        self.transport = transport
        self.trust = trust
        self.clock = clock
        self.policy = policy or DomainPolicy()
        self.policies = dict(policies or {})
        self.keypair = keypair
        self.ltc = ltc
        self.directory = directory
        self.current_ticket: HeldTicket | None = None
        self.pool: list[PoolEntry] = []
        self.crl_cache: dict[str, CrlCache] = {}
        self.events: list[IssuanceEvent] = []

    def _channel(self, server_id: str, auth: crypto.KeyPair | None = None) -> Channel:
        key = self.trust.key_of(server_id)
        if key is None:
            raise UnknownIssuer(f"{server_id} fora do trust store do veículo")
        return Channel(self.transport, server_id, key, self.clock, skew=self.policy.clock_skew_seconds, auth=auth)

    def _require_ltc(self) -> None:
        if self.ltc is None or self.keypair is None:
            raise Unauthorized("veículo sem LTC")

    def _accept_ltc(self, ltc: LongTermCertificate, public_key: bytes) -> LongTermCertificate:
        key = self.trust.key_of(self.home_ltca)
        if ltc.issuer != self.home_ltca or ltc.public_key != public_key or ltc.subject_id != self.subject_id:
            raise ResponseInvalid("LTC devolvido não corresponde ao pedido")
        if key is None or not signature_valid(ltc, key):
            raise ResponseInvalid("assinatura do LTC não confere")
        return ltc

    # --- identidade de longo prazo ---

    def enroll(self, validity: Interval) -> LongTermCertificate:
        keypair = crypto.generate_keypair()
        reply = self._channel(self.home_ltca).call(
            MsgType.REG_REQ, RegisterRequest(self.subject_id, make_csr(keypair), validity), LtcResponse
        )
        self.ltc = self._accept_ltc(reply.ltc, keypair.public)
        self.keypair = keypair
        logger.info("%s registrado em %s (LTC %d)", self.subject_id, self.home_ltca, self.ltc.serial)
        return self.ltc

    def update_ltc(self) -> LongTermCertificate:
        self._require_ltc()
        keypair = crypto.generate_keypair()
        reply = self._channel(self.home_ltca, auth=self.keypair).call(
            MsgType.UPDATE_LTC_REQ, UpdateLtcRequest(self.ltc, make_csr(keypair)), LtcResponse
        )
        self.ltc = self._accept_ltc(reply.ltc, keypair.public)
        self.keypair = keypair
        return self.ltc

    # --- tickets ---

    def ticket_period(self, interval: Interval) -> Interval:
        """Períodos Γ inteiros que cobrem `interval`: é só isso que a LTCA vê do pedido."""
        return interval.snap_outward(self.policy.ticket_interval_seconds, self.policy.grid_epoch)

    def acquire_ticket(self, target: str, interval: Interval) -> HeldTicket:
        """
        Pede à LTCA de origem um ticket cujo digest só abre para `target`.
        O pedido leva os períodos Γ que cobrem `interval`, nunca o próprio
        subintervalo. Sem nova tentativa: repetir um pedido que a LTCA já
        atendeu só daria OverlappingTicket.
        """
        self._require_ltc()
        rnd = crypto.random_rnd()
        digest = crypto.hash_bind(target, rnd)
        period = self.ticket_period(interval)
        reply = self._channel(self.home_ltca, auth=self.keypair).call(
            MsgType.TICKET_REQ, TicketRequest(digest, period, self.ltc), TicketResponse
        )
        ticket = reply.ticket
        if ticket.issuer != self.home_ltca or ticket.target_digest != digest:
            raise ResponseInvalid("ticket devolvido não corresponde ao pedido")
        # A LTCA corta períodos já passados do início, nunca do fim.
        if not ticket.interval.within(period) or ticket.interval.end < interval.end:
            raise ResponseInvalid("ticket não cobre o intervalo pedido")
        if validate_chain(ticket, self.trust, self.clock.now()) not in _USABLE:
            raise ResponseInvalid("ticket devolvido não valida")
        self.current_ticket = HeldTicket(ticket, rnd, target)
        return self.current_ticket

    def exchange_ticket(self, foreign_ltca: str, foreign_pca: str, interval: Interval) -> HeldTicket:
        """
        Troca o f-tkt guardado por um n-tkt da LTCA estrangeira, agora ligado à
        PCA estrangeira. O pedido repete o período do f-tkt: a LTCA estrangeira
        também não fica sabendo de `interval`.
        """
        held = self.current_ticket
        if held is None:
            raise TicketInvalid("nenhum f-tkt guardado")
        rnd = crypto.random_rnd()
        digest = crypto.hash_bind(foreign_pca, rnd)
        request = ForeignTicketRequest(held.ticket, held.rnd, digest, held.ticket.interval)
        try:
            reply = self._channel(foreign_ltca).call(MsgType.NTKT_REQ, request, TicketResponse)
        except (TicketReused, TicketBindingMismatch):
            self.current_ticket = None
            raise
        ticket = reply.ticket
        if ticket.issuer != foreign_ltca or ticket.target_digest != digest:
            raise ResponseInvalid("n-tkt não corresponde ao pedido")
        if not ticket.interval.within(held.ticket.interval):
            raise ResponseInvalid("n-tkt fora do período do f-tkt")
        if ticket.interval.end < interval.end:
            raise ResponseInvalid("n-tkt não cobre o intervalo pedido")
        if validate_chain(ticket, self.trust, self.clock.now()) not in _USABLE:
            raise ResponseInvalid("n-tkt devolvido não valida")
        self.current_ticket = HeldTicket(ticket, rnd, foreign_pca)
        return self.current_ticket

    # --- pseudônimos ---

    def policy_for(self, ca_id: str) -> DomainPolicy:
        """Política do domínio da autoridade; a de origem quando não há outra conhecida."""
        anchor = self.trust.get(ca_id)
        return self.policies.get(anchor.domain if anchor else "", self.policy)

    def plan_slots(self, sub_interval: Interval, pca: str | None = None) -> int:
        policy = self.policy_for(pca) if pca else self.policy
        return len(align_lifetimes(sub_interval, policy.pseudonym_lifetime_seconds, policy.grid_epoch))

    def acquire_pseudonyms(self, pca: str, sub_interval: Interval, n: int | None = None, *, keys=None) -> int:
        """
        Gera as chaves antes da troca e pede um pseudônimo por chave.

        Uma nova tentativa em ServiceUnavailable (réplica caída antes de
        atender). O ticket é descartado quando a PCA o consome ou o queima.

        :raises MismatchedResponse: se algum pseudônimo não traz a chave do CSR correspondente.
        """
        held = self.current_ticket
        if held is None:
            raise TicketInvalid("nenhum ticket guardado")
        if held.target != pca or crypto.hash_bind(pca, held.rnd) != held.ticket.target_digest:
            raise TicketBindingMismatch(f"o ticket guardado não abre para {pca}")
        if not sub_interval.within(held.ticket.interval):
            raise IntervalViolation("subintervalo fora do período do ticket")
        if keys is None:
            keys = self.generate_keys(self.plan_slots(sub_interval, pca) if n is None else n)
        request = PseudonymRequest(held.rnd, sub_interval, held.ticket, tuple(make_csr(k) for k in keys))
        channel = self._channel(pca)
        try:
            try:
                reply = channel.call(MsgType.PSNYM_REQ, request, PseudonymResponse)
            except ServiceUnavailable:
                logger.info("%s: %s indisponível, nova tentativa", self.subject_id, pca)
                reply = channel.call(MsgType.PSNYM_REQ, request, PseudonymResponse)
        except (TicketReused, TicketInvalid, MaliciousRequester):
            self.current_ticket = None
            raise
        self.current_ticket = None
        return self._accept_pseudonyms(pca, sub_interval, keys, reply)

    @staticmethod
    def generate_keys(count: int) -> list[crypto.KeyPair]:
        return [crypto.generate_keypair() for _ in range(count)]

    def _accept_pseudonyms(self, pca, sub_interval, keys, reply) -> int:
        if len(reply.items) != len(keys):
            raise MismatchedResponse("número de respostas diferente do número de CSRs")
        policy = self.policy_for(pca)
        closure = sub_interval.snap_outward(policy.pseudonym_lifetime_seconds, policy.grid_epoch)
        accepted = []
        for keypair, item in zip(keys, reply.items):
            if item.pseudonym is None:
                continue
            psnym = item.pseudonym
            if psnym.public_key != keypair.public:
                raise MismatchedResponse(f"pseudônimo {psnym.serial} com chave diferente do CSR")
            if psnym.issuer != pca or not psnym.interval.within(closure):
                raise ResponseInvalid(f"pseudônimo {psnym.serial} fora do pedido")
            if not signature_valid(psnym, self.trust.key_of(pca)):
                raise ResponseInvalid(f"pseudônimo {psnym.serial} não valida")
            accepted.append(PoolEntry(keypair, psnym))
        for entry in accepted:
            self._check_disjoint(entry, accepted)
        for entry in accepted:
            self.pool.append(entry)
            self.events.append(IssuanceEvent(
                entry.pseudonym.serial, pca, entry.pseudonym.interval, self.subject_id
            ))
        self.pool.sort(key=lambda e: e.pseudonym.interval.start)
        return len(accepted)

    def _check_disjoint(self, entry: PoolEntry, batch: list[PoolEntry]) -> None:
        interval = entry.pseudonym.interval
        others = [e for e in self.pool + batch if e is not entry]
        if any(e.pseudonym.interval.overlaps(interval) for e in others):
            raise ResponseInvalid(f"pseudônimo {entry.pseudonym.serial} sobrepõe o pool")

    def roam(self, foreign_ltca: str, foreign_pca: str, interval: Interval, n: int | None = None) -> int:
        """
        f-tkt na LTCA de origem (o digest esconde a LTCA estrangeira), n-tkt na
        LTCA estrangeira (novo Rnd esconde a PCA estrangeira), pseudônimos na
        PCA estrangeira. Uma falha deixa guardado o ticket da última etapa concluída.
        """
        keys = self.generate_keys(self.plan_slots(interval, foreign_pca) if n is None else n)
        self.acquire_ticket(foreign_ltca, interval)
        self.exchange_ticket(foreign_ltca, foreign_pca, interval)
        return self.acquire_pseudonyms(foreign_pca, interval, keys=keys)

    def current_pseudonym(self, now: int | None = None) -> PoolEntry | None:
        now = self.clock.now() if now is None else now
        for entry in self.pool:
            if entry.pseudonym.interval.covers(now):
                return entry
        return None

    def prune(self, now: int | None = None) -> int:
        now = self.clock.now() if now is None else now
        before = len(self.pool)
        self.pool = [e for e in self.pool if e.pseudonym.interval.end > now]
        return before - len(self.pool)

    def pcas_of(self, domain: str) -> list[str]:
        """PCAs de um domínio, pelo diretório quando houver um, senão pelo trust store."""
        if self.directory is not None:
            return [e.ca_id for e in self.directory.list_by_domain(domain, Role.PCA)]
        return [a.ca_id for a in self.trust.by_role(Role.PCA) if a.domain == domain]

    # --- revogação ---

    def refresh_crl(self, pca: str) -> CrlCache:
        """Busca a CRL (delta quando já há cache). Repetir é idempotente, então há uma nova tentativa."""
        cached = self.crl_cache.get(pca)
        request = CrlRequest(cached.sequence if cached else None)
        channel = self._channel(pca)
        try:
            crl = channel.call(MsgType.CRL_REQ, request, CrlResponse).crl
        except ServiceUnavailable:
            crl = channel.call(MsgType.CRL_REQ, request, CrlResponse).crl
        if crl.issuer != pca or not signature_valid(crl, channel.server_key):
            raise ResponseInvalid("CRL sem assinatura válida da PCA")
        if cached is not None and crl.sequence < cached.sequence:
            raise ResponseInvalid("CRL com sequência anterior à do cache")
        if crl.delta:
            if cached is None or crl.since_sequence != cached.sequence:
                raise ResponseInvalid("delta de CRL não parte da sequência em cache")
            entries = cached.entries | set(crl.entries)
        else:
            entries = set(crl.entries)
        self.crl_cache[pca] = CrlCache(crl.sequence, crl.issued_at, entries)
        return self.crl_cache[pca]

    def check_status(self, pca: str, serial: int, now: int | None = None) -> CertStatus:
        """OCSP autenticado com o pseudônimo corrente do próprio veículo."""
        current = self.current_pseudonym(now)
        if current is None:
            raise Unauthorized("nenhum pseudônimo corrente para autenticar o OCSP")
        nonce = crypto.random_nonce()
        timestamp = self.clock.now()
        proof = current.keypair.sign(canonical_encode(OcspChallenge(serial, nonce, timestamp)))
        reply = self._channel(pca).call(
            MsgType.OCSP_REQ, OcspRequest(serial, current.pseudonym, proof), OcspResponse,
            nonce=nonce, timestamp=timestamp,
        )
        if reply.query_serial != serial:
            raise ResponseInvalid("OCSP respondeu sobre outro serial")
        return reply.status
