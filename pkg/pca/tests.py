import random
from concurrent.futures import ThreadPoolExecutor

import pytest
from django.db import connection

from conftest import GAMMA, T0, TAU, novo_veiculo
from core import crypto
from core.credentials import Csr, Interval, Ticket, make_csr, sign_credential, signature_valid
from core.encoding import canonical_encode
from core.exceptions import (
    BadProofOfPossession,
    BatchTooLarge,
    IntervalViolation,
    MaliciousRequester,
    NoSlot,
    ServiceUnavailable,
    TicketBindingMismatch,
    TicketInvalid,
    TicketReused,
    Unauthorized,
    UnknownPseudonym,
    UnknownTicket,
)

from . import services
from .balancer import ReplicaBalancer, replica_id
from .messages import CertStatus, OcspChallenge
from .models import IssuedPseudonym, TicketUsage
from .snapshot import export_snapshot


@pytest.fixture
def cenario_pca(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-pca')
    return {
        'pca': implantacao.authorities['pca-a-1'],
        'ra_key': implantacao.material.keys['ra-a'].public,
        'veiculo': veiculo,
        'held': veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + 900)),
    }


def csrs_validos(n):
    return [make_csr(crypto.generate_keypair()) for _ in range(n)]


def csr_sem_posse():
    return Csr(crypto.generate_keypair().public, b"\x00" * 64)


def emitir(cenario, csrs, intervalo=Interval(T0, T0 + 900)):
    held = cenario['held']
    return services.issue_pseudonyms(cenario['pca'], held.rnd, intervalo, held.ticket, csrs)


# --- grade de slots ---

def test_slots_alinhados_a_grade():
    slots = services.align_lifetimes(Interval(T0 + 10, T0 + 610), TAU)
    assert slots == [Interval(T0, T0 + TAU), Interval(T0 + TAU, T0 + 2 * TAU), Interval(T0 + 2 * TAU, T0 + 3 * TAU)]


def test_pedidos_parecidos_recebem_os_mesmos_slots():
    a = services.align_lifetimes(Interval(T0 + 10, T0 + 610), TAU)
    b = services.align_lifetimes(Interval(T0 + 50, T0 + 650), TAU)
    assert a == b


def test_slots_respeitam_o_epoch():
    slots = services.align_lifetimes(Interval(1000, 1100), 300, grid_epoch=900)
    assert slots == [Interval(900, 1200)]
    with pytest.raises(IntervalViolation):
        services.align_lifetimes(Interval(800, 1100), 300, grid_epoch=900)


# --- emissão ---

@pytest.mark.django_db
def test_emissao_pelo_veiculo_preenche_o_pool(cenario_pca):
    veiculo = cenario_pca['veiculo']
    assert veiculo.acquire_pseudonyms('pca-a-1', Interval(T0, T0 + 900)) == 3
    intervalos = [e.pseudonym.interval for e in veiculo.pool]
    assert intervalos == [Interval(T0 + k * TAU, T0 + (k + 1) * TAU) for k in range(3)]
    assert veiculo.current_ticket is None
    assert veiculo.current_pseudonym().pseudonym.interval.start == T0


@pytest.mark.django_db
def test_pseudonimo_nao_revela_o_veiculo(cenario_pca):
    outcomes = emitir(cenario_pca, csrs_validos(1))
    pseudonym = outcomes[0].pseudonym
    assert 'veiculo-pca' not in repr(pseudonym)
    assert pseudonym.issuer == 'pca-a-1'
    assert signature_valid(pseudonym, cenario_pca['pca'].public_key)


@pytest.mark.django_db
def test_ticket_nao_pode_ser_reutilizado(cenario_pca):
    emitir(cenario_pca, csrs_validos(1))
    with pytest.raises(TicketReused):
        emitir(cenario_pca, csrs_validos(1))


@pytest.mark.django_db
def test_ticket_de_outra_pca_e_recusado(implantacao, cenario_pca):
    held = cenario_pca['held']
    with pytest.raises(TicketBindingMismatch):
        services.issue_pseudonyms(
            implantacao.authorities['pca-b-1'], held.rnd, Interval(T0, T0 + 300), held.ticket, csrs_validos(1)
        )
    # O vínculo é checado antes de marcar o uso.
    assert not TicketUsage.objects.exists()


@pytest.mark.django_db
def test_rnd_errado_e_recusado(cenario_pca):
    held = cenario_pca['held']
    with pytest.raises(TicketBindingMismatch):
        services.issue_pseudonyms(
            cenario_pca['pca'], crypto.random_rnd(), Interval(T0, T0 + 300), held.ticket, csrs_validos(1)
        )


@pytest.mark.django_db
def test_intervalo_fora_do_ticket(cenario_pca):
    with pytest.raises(IntervalViolation):
        emitir(cenario_pca, csrs_validos(1), Interval(T0 + GAMMA - 100, T0 + GAMMA + 100))


@pytest.mark.django_db
def test_ticket_forjado_e_recusado(cenario_pca):
    rnd = crypto.random_rnd()
    forjado = sign_credential(
        Ticket(7, crypto.hash_bind('pca-a-1', rnd), Interval(T0, T0 + GAMMA), T0 + GAMMA, 'ltca-a'),
        crypto.generate_keypair(),
    )
    with pytest.raises(TicketInvalid):
        services.issue_pseudonyms(cenario_pca['pca'], rnd, Interval(T0, T0 + 300), forjado, csrs_validos(1))


@pytest.mark.django_db
def test_ticket_expirado_e_recusado(cenario_pca, relogio):
    relogio.advance(GAMMA)
    with pytest.raises(TicketInvalid):
        emitir(cenario_pca, csrs_validos(1), Interval(T0, T0 + 300))


@pytest.mark.django_db
def test_ticket_futuro_e_aceito(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-antecipado')
    intervalo = Interval(T0 + GAMMA, T0 + GAMMA + 600)
    veiculo.acquire_ticket('pca-a-1', intervalo)
    assert veiculo.acquire_pseudonyms('pca-a-1', intervalo) == 2


@pytest.mark.django_db
def test_limiar_de_pop_aborta_e_queima_o_ticket(cenario_pca):
    csrs = csrs_validos(2) + [csr_sem_posse() for _ in range(3)]
    with pytest.raises(MaliciousRequester):
        emitir(cenario_pca, csrs)
    assert not IssuedPseudonym.objects.exists()
    with pytest.raises(TicketReused):
        emitir(cenario_pca, csrs_validos(1))


@pytest.mark.django_db
def test_pop_invalida_abaixo_do_limiar_falha_so_o_item(cenario_pca):
    outcomes = emitir(cenario_pca, [csr_sem_posse()] + csrs_validos(2))
    assert isinstance(outcomes[0].error, BadProofOfPossession)
    assert [o.ok for o in outcomes] == [False, True, True]
    # O CSR recusado não consome slot.
    assert outcomes[1].pseudonym.interval == Interval(T0, T0 + TAU)


@pytest.mark.django_db
def test_csrs_alem_dos_slots_recebem_no_slot(cenario_pca):
    outcomes = emitir(cenario_pca, csrs_validos(4), Interval(T0, T0 + 600))
    assert [o.ok for o in outcomes] == [True, True, False, False]
    assert isinstance(outcomes[3].error, NoSlot)
    inicio = [o.pseudonym.interval.start for o in outcomes if o.ok]
    assert inicio == [T0, T0 + TAU]


@pytest.mark.django_db
def test_lote_vazio(cenario_pca):
    with pytest.raises(BatchTooLarge):
        emitir(cenario_pca, [])


# --- revogação, CRL e OCSP ---

@pytest.mark.django_db
def test_revogacao_publica_crl_e_e_idempotente(cenario_pca):
    outcomes = emitir(cenario_pca, csrs_validos(3))
    serials = sorted(o.pseudonym.serial for o in outcomes)
    pca, ra_key, ticket = cenario_pca['pca'], cenario_pca['ra_key'], cenario_pca['held'].ticket

    assert services.get_crl(pca).sequence == 0
    assert services.revoke_for_ticket(pca, ticket.issuer, ticket.serial, ra_key) == 3
    crl = services.get_crl(pca)
    assert (crl.sequence, list(crl.entries), crl.delta) == (1, serials, False)
    assert signature_valid(crl, pca.public_key)

    assert services.revoke_for_ticket(pca, ticket.issuer, ticket.serial, ra_key) == 0
    assert services.get_crl(pca).sequence == 1


@pytest.mark.django_db
def test_crl_delta(cenario_pca):
    emitir(cenario_pca, csrs_validos(2))
    pca, ticket = cenario_pca['pca'], cenario_pca['held'].ticket
    services.revoke_for_ticket(pca, ticket.issuer, ticket.serial, cenario_pca['ra_key'])
    delta = services.get_crl(pca, since_sequence=0)
    assert delta.delta and delta.since_sequence == 0 and len(delta.entries) == 2
    assert services.get_crl(pca, since_sequence=1).entries == ()
    # Sequência desconhecida: CRL completa.
    assert not services.get_crl(pca, since_sequence=9).delta


@pytest.mark.django_db
def test_revogacao_exige_ra_e_ticket_conhecido(cenario_pca):
    pca, ticket = cenario_pca['pca'], cenario_pca['held'].ticket
    with pytest.raises(Unauthorized):
        services.revoke_for_ticket(pca, ticket.issuer, ticket.serial, crypto.generate_keypair().public)
    with pytest.raises(UnknownTicket):
        services.revoke_for_ticket(pca, ticket.issuer, ticket.serial, cenario_pca['ra_key'])


@pytest.mark.django_db
def test_cache_de_crl_do_veiculo(cenario_pca):
    veiculo = cenario_pca['veiculo']
    veiculo.acquire_pseudonyms('pca-a-1', Interval(T0, T0 + 600))
    assert veiculo.refresh_crl('pca-a-1').sequence == 0
    ticket = cenario_pca['held'].ticket
    services.revoke_for_ticket(cenario_pca['pca'], ticket.issuer, ticket.serial, cenario_pca['ra_key'])
    cache = veiculo.refresh_crl('pca-a-1')
    assert cache.sequence == 1
    assert cache.entries == {e.pseudonym.serial for e in veiculo.pool}


@pytest.mark.django_db
def test_ocsp_autenticado_por_pseudonimo(implantacao, cenario_pca):
    veiculo = cenario_pca['veiculo']
    veiculo.acquire_pseudonyms('pca-a-1', Interval(T0, T0 + 600))
    outro = novo_veiculo(implantacao, 'veiculo-vizinho')
    outro.acquire_ticket('pca-a-1', Interval(T0, T0 + 300))
    outro.acquire_pseudonyms('pca-a-1', Interval(T0, T0 + 300))
    alvo = outro.pool[0].pseudonym.serial

    assert veiculo.check_status('pca-a-1', alvo) == CertStatus.GOOD
    assert veiculo.check_status('pca-a-1', 999_999) == CertStatus.UNKNOWN
    uso = IssuedPseudonym.objects.get(authority='pca-a-1', serial=alvo).usage
    services.revoke_for_ticket(
        cenario_pca['pca'], uso.ticket_issuer, uso.ticket_serial, cenario_pca['ra_key']
    )
    assert veiculo.check_status('pca-a-1', alvo) == CertStatus.REVOKED
    # Com o próprio pseudônimo revogado, o outro veículo não se autentica mais.
    with pytest.raises(Unauthorized):
        outro.check_status('pca-a-1', alvo)


@pytest.mark.django_db
def test_ocsp_sem_pseudonimo_corrente(cenario_pca):
    with pytest.raises(Unauthorized):
        cenario_pca['veiculo'].check_status('pca-a-1', 1)


@pytest.mark.django_db
def test_mapeamento_para_o_ticket(cenario_pca):
    outcomes = emitir(cenario_pca, csrs_validos(1))
    ticket = cenario_pca['held'].ticket
    found = services.map_pseudonym(cenario_pca['pca'], outcomes[0].pseudonym.serial, cenario_pca['ra_key'])
    assert found == ('ltca-a', ticket.serial)
    with pytest.raises(UnknownPseudonym):
        services.map_pseudonym(cenario_pca['pca'], 999_999, cenario_pca['ra_key'])
    with pytest.raises(Unauthorized):
        services.map_pseudonym(cenario_pca['pca'], outcomes[0].pseudonym.serial, None)


@pytest.mark.django_db
def test_snapshot_da_pca(cenario_pca):
    outcomes = emitir(cenario_pca, csrs_validos(2))
    snap = export_snapshot(cenario_pca['pca'])
    assert [(u.ticket_issuer, u.ticket_serial) for u in snap.usages] == [('ltca-a', cenario_pca['held'].ticket.serial)]
    assert sorted(p.serial for p in snap.pseudonyms) == sorted(o.pseudonym.serial for o in outcomes)
    assert snap.revoked == ()


# --- réplicas ---

@pytest.mark.django_db
def test_replicas_nao_repetem_seriais_nem_aceitam_ticket_duas_vezes(implantacao_replicada):
    veiculo = novo_veiculo(implantacao_replicada, 'veiculo-replicas')
    held = veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + 600))
    r0 = implantacao_replicada.endpoints[replica_id('pca-a-1', 0)].authority
    r1 = implantacao_replicada.endpoints[replica_id('pca-a-1', 1)].authority
    emitidos = services.issue_pseudonyms(r0, held.rnd, Interval(T0, T0 + 600), held.ticket, csrs_validos(2))
    assert all(o.pseudonym.serial % 2 == 0 for o in emitidos)
    with pytest.raises(TicketReused):
        services.issue_pseudonyms(r1, held.rnd, Interval(T0, T0 + 600), held.ticket, csrs_validos(2))

    outro = novo_veiculo(implantacao_replicada, 'veiculo-replicas-2')
    held = outro.acquire_ticket('pca-a-1', Interval(T0, T0 + 600))
    emitidos = services.issue_pseudonyms(r1, held.rnd, Interval(T0, T0 + 600), held.ticket, csrs_validos(2))
    assert all(o.pseudonym.serial % 2 == 1 for o in emitidos)


@pytest.mark.django_db
def test_failover_para_a_replica_de_pe(implantacao_replicada):
    implantacao_replicada.transport.crash(replica_id('pca-a-1', 0))
    veiculo = novo_veiculo(implantacao_replicada, 'veiculo-failover')
    veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + 600))
    assert veiculo.acquire_pseudonyms('pca-a-1', Interval(T0, T0 + 600)) == 2
    assert all(e.pseudonym.serial % 2 == 1 for e in veiculo.pool)


class TransporteFalso:
    def __init__(self):
        self.up = {'r0', 'r1'}

    def is_up(self, rid):
        return rid in self.up

    def exchange(self, rid, request):
        if rid not in self.up:
            raise ServiceUnavailable(rid)
        return rid


def test_balanceador_tira_e_devolve_replica_da_rotacao():
    agora = [0.0]
    transporte = TransporteFalso()
    balanceador = ReplicaBalancer(transporte, ['r0', 'r1'], retry_interval=5.0, monotonic=lambda: agora[0])
    transporte.up.discard('r0')
    balanceador.mark_down('r0')
    assert balanceador.healthy() == ['r1']
    transporte.up.add('r0')
    agora[0] = 4.0
    assert balanceador.healthy() == ['r1']
    agora[0] = 5.0
    assert balanceador.healthy() == ['r0', 'r1']


def test_balanceador_sem_replicas():
    transporte = TransporteFalso()
    transporte.up.clear()
    balanceador = ReplicaBalancer(transporte, ['r0'], retry_interval=60.0, monotonic=lambda: 0.0)
    balanceador.mark_down('r0')
    with pytest.raises(ServiceUnavailable):
        balanceador.pick(None)


# --- slots passados, carga e revogação em massa ---

def ticket_da_ltca(implantacao, serial, intervalo=Interval(T0, T0 + GAMMA)):
    """Ticket válido de ltca-a para pca-a-1, assinado direto com a chave da LTCA."""
    rnd = crypto.random_rnd()
    ticket = sign_credential(
        Ticket(serial, crypto.hash_bind('pca-a-1', rnd), intervalo, intervalo.end, 'ltca-a'),
        implantacao.material.keys['ltca-a'],
    )
    return rnd, ticket


@pytest.mark.django_db
def test_slots_ja_terminados_nao_sao_emitidos(cenario_pca, relogio):
    relogio.advance(2 * TAU + 10)
    with pytest.raises(IntervalViolation):
        emitir(cenario_pca, csrs_validos(1), Interval(T0, T0 + 2 * TAU))
    outcomes = emitir(cenario_pca, csrs_validos(3), Interval(T0, T0 + 900))
    assert [o.ok for o in outcomes] == [True, False, False]
    assert outcomes[0].pseudonym.interval == Interval(T0 + 2 * TAU, T0 + 3 * TAU)
    assert all(isinstance(o.error, NoSlot) for o in outcomes[1:])


@pytest.mark.django_db
def test_contencao_no_ticket_em_pedidos_aleatorios(implantacao):
    pca = implantacao.authorities['pca-a-1']
    rnd, ticket = ticket_da_ltca(implantacao, 50_000)
    rng = random.Random(3)
    aceitos = 0
    for _ in range(10_000):
        inicio = T0 - 2 * TAU + rng.randrange(GAMMA + 4 * TAU)
        pedido = Interval(inicio, inicio + rng.randint(1, GAMMA + 2 * TAU))
        esperado = pedido.snap_outward(TAU).within(ticket.interval)
        try:
            services._check_ticket(pca, rnd, pedido, ticket, T0)
        except IntervalViolation:
            assert not esperado
            continue
        assert esperado
        slots = services.align_lifetimes(pedido, TAU)
        assert all(s.within(ticket.interval) for s in slots)
        aceitos += 1
    assert 0 < aceitos < 10_000


@pytest.mark.django_db(transaction=True)
def test_cem_tickets_repetidos_em_paralelo_emitem_uma_vez_cada(implantacao):
    pca = implantacao.authorities['pca-a-1']
    tickets = [ticket_da_ltca(implantacao, 60_000 + i) for i in range(100)]

    def usar(par):
        rnd, ticket = par
        try:
            outcomes = services.issue_pseudonyms(pca, rnd, Interval(T0, T0 + TAU), ticket, csrs_validos(1))
            return 'ok' if outcomes[0].ok else 'falhou'
        except TicketReused:
            return 'reusado'
        finally:
            connection.close()

    with ThreadPoolExecutor(max_workers=16) as pool:
        resultados = list(pool.map(usar, [par for par in tickets for _ in range(10)]))
    assert resultados.count('ok') == 100
    assert resultados.count('reusado') == 900
    assert TicketUsage.objects.filter(authority='pca-a-1').count() == 100
    assert IssuedPseudonym.objects.filter(authority='pca-a-1').count() == 100


@pytest.mark.django_db
@pytest.mark.parametrize("invalidas", range(6))
def test_limiar_de_pop_para_cada_quantidade_de_invalidas(implantacao, invalidas):
    pca = implantacao.authorities['pca-a-1']
    rnd, ticket = ticket_da_ltca(implantacao, 70_000)
    csrs = [csr_sem_posse() for _ in range(invalidas)] + csrs_validos(5 - invalidas)
    random.Random(invalidas).shuffle(csrs)
    if invalidas >= pca.policy.pop_failure_threshold:
        with pytest.raises(MaliciousRequester):
            services.issue_pseudonyms(pca, rnd, Interval(T0, T0 + GAMMA), ticket, csrs)
        assert not IssuedPseudonym.objects.exists()
        assert TicketUsage.objects.filter(ticket_serial=70_000).exists()
        return
    outcomes = services.issue_pseudonyms(pca, rnd, Interval(T0, T0 + GAMMA), ticket, csrs)
    assert sum(o.ok for o in outcomes) == 5 - invalidas
    assert sum(isinstance(o.error, BadProofOfPossession) for o in outcomes) == invalidas


@pytest.mark.django_db
def test_revogacoes_aleatorias_mantem_a_crl_monotona(implantacao):
    pca = implantacao.authorities['pca-a-1']
    ra_key = implantacao.material.keys['ra-a'].public
    emitidos = []
    for i in range(100):
        rnd, ticket = ticket_da_ltca(implantacao, 80_000 + i)
        outcome = services.issue_pseudonyms(pca, rnd, Interval(T0, T0 + TAU), ticket, csrs_validos(1))[0]
        emitidos.append((ticket, outcome.pseudonym.serial))
    chave = crypto.generate_keypair()
    rnd, ticket = ticket_da_ltca(implantacao, 81_000)
    solicitante = services.issue_pseudonyms(pca, rnd, Interval(T0, T0 + TAU), ticket, [make_csr(chave)])[0].pseudonym

    random.Random(5).shuffle(emitidos)
    anterior = services.get_crl(pca)
    for nonce, (ticket, serial) in enumerate(emitidos, start=1):
        assert services.revoke_for_ticket(pca, ticket.issuer, ticket.serial, ra_key) == 1
        crl = services.get_crl(pca)
        assert crl.sequence == anterior.sequence + 1
        assert set(anterior.entries) < set(crl.entries)
        assert serial in crl.entries
        assert signature_valid(crl, pca.public_key)
        prova = chave.sign(canonical_encode(OcspChallenge(serial, nonce, T0)))
        assert services.ocsp_check(pca, serial, solicitante, prova, nonce, T0) == CertStatus.REVOKED
        anterior = crl
    assert len(anterior.entries) == 100


@pytest.mark.django_db
def test_ocsp_confere_a_crl_da_pca_do_solicitante(implantacao, cenario_pca, relogio):
    visitante = novo_veiculo(implantacao, 'veiculo-b', domain='B')
    visitante.acquire_ticket('pca-b-1', Interval(T0, T0 + 600))
    visitante.acquire_pseudonyms('pca-b-1', Interval(T0, T0 + 600))
    alvo = emitir(cenario_pca, csrs_validos(1))[0].pseudonym.serial
    assert visitante.check_status('pca-a-1', alvo) == CertStatus.GOOD
    # Sem acesso à CRL da emissora, o pseudônimo estrangeiro não autentica.
    with pytest.raises(Unauthorized):
        services.ocsp_check(cenario_pca['pca'], alvo, visitante.pool[0].pseudonym, b"", 1, T0)

    uso = IssuedPseudonym.objects.get(authority='pca-b-1', serial=visitante.pool[0].pseudonym.serial).usage
    assert services.revoke_for_ticket(
        implantacao.authorities['pca-b-1'], uso.ticket_issuer, uso.ticket_serial,
        implantacao.material.keys['ra-b'].public,
    ) == 2
    # A CRL da pca-b-1 fica em cache por um minuto.
    assert visitante.check_status('pca-a-1', alvo) == CertStatus.GOOD
    relogio.advance(61)
    with pytest.raises(Unauthorized):
        visitante.check_status('pca-a-1', alvo)
