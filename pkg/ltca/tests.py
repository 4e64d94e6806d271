import random
import threading
from concurrent.futures import ThreadPoolExecutor

import pytest
from django.db import connection

from conftest import GAMMA, T0, TAU, novo_veiculo
from core import crypto
from core.credentials import Interval, Ticket, make_csr, sign_credential
from core.exceptions import (
    BadProofOfPossession,
    BadSignature,
    DuplicateSubject,
    IntervalViolation,
    OverlappingTicket,
    RevokedCredential,
    TicketBindingMismatch,
    TicketReused,
    Unauthorized,
    UnknownIssuer,
    UnknownTicket,
)
from pca import services as pca_services
from sim.monitors import sybil_scan

from . import services
from .models import IssuedLtc, TicketLedgerEntry, VehicleRecord
from .snapshot import export_snapshot


@pytest.fixture
def cenario_ltca(implantacao):
    """LTCA do domínio A, a chave da RA do mesmo domínio e um veículo registrado."""
    return {
        'ltca': implantacao.authorities['ltca-a'],
        'ra_key': implantacao.material.keys['ra-a'].public,
        'veiculo': novo_veiculo(implantacao, 'veiculo-ltca'),
    }


def registrar(ltca, subject_id, kp=None):
    kp = kp or crypto.generate_keypair()
    return services.register_vehicle(ltca, make_csr(kp), subject_id, Interval(T0 - 60, T0 + 86400)), kp


@pytest.mark.django_db
def test_registro_emite_ltc_assinado(implantacao):
    ltca = implantacao.authorities['ltca-a']
    ltc, kp = registrar(ltca, 'veiculo-1')
    assert ltc.issuer == 'ltca-a'
    assert ltc.public_key == kp.public
    assert VehicleRecord.objects.filter(authority='ltca-a', subject_id='veiculo-1').exists()
    assert IssuedLtc.objects.get(authority='ltca-a', serial=ltc.serial).current


@pytest.mark.django_db
def test_registro_duplicado_e_recusado(implantacao):
    ltca = implantacao.authorities['ltca-a']
    registrar(ltca, 'veiculo-1')
    with pytest.raises(DuplicateSubject):
        registrar(ltca, 'veiculo-1')


@pytest.mark.django_db
def test_mesmo_subject_pode_existir_em_outra_ltca(implantacao):
    registrar(implantacao.authorities['ltca-a'], 'veiculo-1')
    ltc, _kp = registrar(implantacao.authorities['ltca-b'], 'veiculo-1')
    assert ltc.issuer == 'ltca-b'


@pytest.mark.django_db
def test_registro_sem_prova_de_posse(implantacao):
    kp, outro = crypto.generate_keypair(), crypto.generate_keypair()
    csr = make_csr(kp)
    forjado = type(csr)(public_key=outro.public, pop_signature=csr.pop_signature)
    with pytest.raises(BadProofOfPossession):
        services.register_vehicle(implantacao.authorities['ltca-a'], forjado, 'v', Interval(T0, T0 + 10))


# --- emissão de tickets ---

@pytest.mark.django_db
def test_ticket_expande_para_a_grade_gamma(cenario_ltca):
    veiculo = cenario_ltca['veiculo']
    held = veiculo.acquire_ticket('pca-a-1', Interval(T0 + 100, T0 + 500))
    assert held.ticket.interval == Interval(T0, T0 + GAMMA)
    assert held.ticket.tkt_expiry == T0 + GAMMA
    assert held.ticket.target_digest == crypto.hash_bind('pca-a-1', held.rnd)


@pytest.mark.django_db
def test_ledger_guarda_so_o_digest(cenario_ltca):
    held = cenario_ltca['veiculo'].acquire_ticket('pca-a-1', Interval(T0, T0 + 300))
    entry = TicketLedgerEntry.objects.get(authority='ltca-a', ticket_serial=held.ticket.serial)
    assert bytes(entry.target_digest) == held.ticket.target_digest
    assert entry.vehicle.subject_id == 'veiculo-ltca'
    assert not hasattr(entry, 'target')


@pytest.mark.django_db
def test_ticket_sobreposto_e_recusado(cenario_ltca):
    veiculo = cenario_ltca['veiculo']
    veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + 300))
    with pytest.raises(OverlappingTicket):
        veiculo.acquire_ticket('pca-a-1', Interval(T0 + 1200, T0 + 1500))
    # Outro destino não muda nada: a LTCA não sabe qual é.
    with pytest.raises(OverlappingTicket):
        veiculo.acquire_ticket('ltca-b', Interval(T0 + 1200, T0 + 1500))
    seguinte = veiculo.acquire_ticket('pca-a-1', Interval(T0 + GAMMA, T0 + GAMMA + 300))
    assert seguinte.ticket.interval.start == T0 + GAMMA
    assert TicketLedgerEntry.objects.filter(authority='ltca-a').count() == 2


@pytest.mark.django_db
def test_periodos_passados_sao_cortados_do_ticket(cenario_ltca, relogio):
    veiculo = cenario_ltca['veiculo']
    veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + 600))
    relogio.advance(GAMMA + 10)
    # O primeiro período já terminou: o ticket novo começa no período corrente.
    held = veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + 2 * GAMMA))
    assert held.ticket.interval == Interval(T0 + GAMMA, T0 + 2 * GAMMA)
    with pytest.raises(IntervalViolation):
        services.issue_ticket(
            cenario_ltca['ltca'], bytes(32), Interval(T0, T0 + 600), veiculo.ltc, peer_key=veiculo.keypair.public
        )


@pytest.mark.django_db
def test_canal_precisa_ser_da_chave_do_ltc(cenario_ltca):
    veiculo = cenario_ltca['veiculo']
    with pytest.raises(Unauthorized):
        services.issue_ticket(
            cenario_ltca['ltca'], bytes(32), Interval(T0, T0 + 300), veiculo.ltc,
            peer_key=crypto.generate_keypair().public,
        )


@pytest.mark.django_db
def test_ltc_de_outra_raiz_e_recusado(cenario_ltca):
    falso = crypto.generate_keypair()
    ltc = sign_credential(cenario_ltca['veiculo'].ltc, falso)
    with pytest.raises(BadSignature):
        services.issue_ticket(cenario_ltca['ltca'], bytes(32), Interval(T0, T0 + 300), ltc, peer_key=ltc.public_key)


@pytest.mark.django_db(transaction=True)
def test_pedidos_concorrentes_so_um_ticket(implantacao):
    """Várias threads com o mesmo LTC: a checagem e a inserção no ledger são atômicas."""
    veiculo = novo_veiculo(implantacao, 'veiculo-concorrente')
    ltca = implantacao.authorities['ltca-a']
    resultados = []

    def pedir(offset):
        try:
            services.issue_ticket(
                ltca, crypto.hash_bind('pca-a-1', crypto.random_rnd()), Interval(T0 + offset, T0 + offset + 300),
                veiculo.ltc, peer_key=veiculo.keypair.public,
            )
            resultados.append('ok')
        except OverlappingTicket:
            resultados.append('sobreposto')
        finally:
            connection.close()

    threads = [threading.Thread(target=pedir, args=(i * 300,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(resultados) == ['ok', 'sobreposto', 'sobreposto', 'sobreposto']
    assert TicketLedgerEntry.objects.filter(vehicle__subject_id='veiculo-concorrente').count() == 1


# --- atualização e revogação ---

@pytest.mark.django_db
def test_ltc_atualizado_substitui_o_antigo(cenario_ltca):
    veiculo = cenario_ltca['veiculo']
    antigo, chave_antiga = veiculo.ltc, veiculo.keypair
    held = veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + 300))
    novo = veiculo.update_ltc()
    assert novo.serial != antigo.serial
    with pytest.raises(RevokedCredential):
        services.issue_ticket(
            cenario_ltca['ltca'], bytes(32), Interval(T0 + GAMMA, T0 + GAMMA + 1), antigo,
            peer_key=chave_antiga.public,
        )
    # Ticket emitido com o LTC antigo continua resolvível.
    found = services.resolve_ticket(cenario_ltca['ltca'], held.ticket.serial, cenario_ltca['ra_key'])
    assert found.subject_id == 'veiculo-ltca'


@pytest.mark.django_db
def test_revogacao_e_idempotente_e_bloqueia_tickets(cenario_ltca):
    ltca, ra_key, veiculo = cenario_ltca['ltca'], cenario_ltca['ra_key'], cenario_ltca['veiculo']
    assert services.revoke_ltc(ltca, 'veiculo-ltca', ra_key) == 1
    assert services.revoke_ltc(ltca, 'veiculo-ltca', ra_key) == 0
    with pytest.raises(RevokedCredential):
        veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + 300))


@pytest.mark.django_db
def test_resolucao_exige_chave_de_ra(cenario_ltca):
    held = cenario_ltca['veiculo'].acquire_ticket('pca-a-1', Interval(T0, T0 + 300))
    with pytest.raises(Unauthorized):
        services.resolve_ticket(cenario_ltca['ltca'], held.ticket.serial, crypto.generate_keypair().public)
    with pytest.raises(Unauthorized):
        services.revoke_ltc(cenario_ltca['ltca'], 'veiculo-ltca', None)
    with pytest.raises(UnknownTicket):
        services.resolve_ticket(cenario_ltca['ltca'], 999_999, cenario_ltca['ra_key'])


# --- troca de ticket estrangeiro ---

@pytest.mark.django_db
def test_troca_de_ticket_estrangeiro(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-roaming')
    intervalo = Interval(T0, T0 + 600)
    f_tkt = veiculo.acquire_ticket('ltca-b', intervalo)
    n_tkt = veiculo.exchange_ticket('ltca-b', 'pca-b-1', intervalo)
    assert n_tkt.ticket.issuer == 'ltca-b'
    assert n_tkt.ticket.interval.within(f_tkt.ticket.interval)
    assert n_tkt.ticket.target_digest == crypto.hash_bind('pca-b-1', n_tkt.rnd)

    ltca_b = implantacao.authorities['ltca-b']
    found = services.resolve_ticket(ltca_b, n_tkt.ticket.serial, implantacao.material.keys['ra-b'].public)
    assert found.is_foreign
    assert (found.home_issuer, found.foreign_serial) == ('ltca-a', f_tkt.ticket.serial)
    # A LTCA estrangeira não registra o veículo.
    assert not VehicleRecord.objects.filter(authority='ltca-b', subject_id='veiculo-roaming').exists()

    with pytest.raises(TicketReused):
        services.exchange_foreign_ticket(
            ltca_b, f_tkt.ticket, f_tkt.rnd, crypto.hash_bind('pca-b-1', crypto.random_rnd()), intervalo
        )


@pytest.mark.django_db
def test_troca_com_rnd_errado(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-roaming')
    f_tkt = veiculo.acquire_ticket('ltca-b', Interval(T0, T0 + 600))
    with pytest.raises(TicketBindingMismatch):
        services.exchange_foreign_ticket(
            implantacao.authorities['ltca-b'], f_tkt.ticket, crypto.random_rnd(), bytes(32), Interval(T0, T0 + 600)
        )


@pytest.mark.django_db
def test_troca_fora_do_periodo_do_ticket(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-roaming')
    f_tkt = veiculo.acquire_ticket('ltca-b', Interval(T0, T0 + 600))
    with pytest.raises(IntervalViolation):
        services.exchange_foreign_ticket(
            implantacao.authorities['ltca-b'], f_tkt.ticket, f_tkt.rnd, bytes(32), Interval(T0, T0 + 2 * GAMMA)
        )


@pytest.mark.django_db
def test_troca_de_ticket_forjado(implantacao):
    rnd = crypto.random_rnd()
    forjado = sign_credential(
        Ticket(1, crypto.hash_bind('ltca-b', rnd), Interval(T0, T0 + GAMMA), T0 + GAMMA, 'ltca-x'),
        crypto.generate_keypair(),
    )
    with pytest.raises(UnknownIssuer):
        services.exchange_foreign_ticket(
            implantacao.authorities['ltca-b'], forjado, rnd, bytes(32), Interval(T0, T0 + 300)
        )


@pytest.mark.django_db
def test_snapshot_tem_so_o_que_a_ltca_guarda(cenario_ltca):
    held = cenario_ltca['veiculo'].acquire_ticket('pca-a-1', Interval(T0, T0 + 300))
    snap = export_snapshot(cenario_ltca['ltca'])
    assert snap.subjects == ('veiculo-ltca',)
    assert [row.ticket_serial for row in snap.tickets] == [held.ticket.serial]
    assert snap.tickets[0].target_digest == held.ticket.target_digest
    assert snap.exchanges == ()


@pytest.mark.django_db(transaction=True)
def test_mil_pedidos_concorrentes_nunca_sobrepoem_tickets(implantacao):
    """LTC antigo e novo, três destinos e períodos aleatórios: no máximo um ticket por instante."""
    veiculo = novo_veiculo(implantacao, 'veiculo-sybil')
    ltca = implantacao.authorities['ltca-a']
    antigo, chave_antiga = veiculo.ltc, veiculo.keypair
    veiculo.update_ltc()
    credenciais = [(antigo, chave_antiga), (veiculo.ltc, veiculo.keypair)]
    destinos = ['pca-a-1', 'ltca-b', 'pca-b-1']
    rng = random.Random(11)
    pedidos = []
    for i in range(1000):
        inicio = T0 + rng.randrange(3 * GAMMA)
        pedidos.append((destinos[i % 3], credenciais[rng.randrange(2)], Interval(inicio, inicio + rng.randint(1, 600))))

    def pedir(pedido):
        destino, (ltc, chave), intervalo = pedido
        rnd = crypto.random_rnd()
        try:
            ticket = services.issue_ticket(
                ltca, crypto.hash_bind(destino, rnd), intervalo, ltc, peer_key=chave.public
            )
            return destino, rnd, ticket
        except (OverlappingTicket, RevokedCredential) as exc:
            return destino, None, exc
        finally:
            connection.close()

    with ThreadPoolExecutor(max_workers=16) as pool:
        resultados = list(pool.map(pedir, pedidos))

    emitidos = [(d, rnd, t) for d, rnd, t in resultados if isinstance(t, Ticket)]
    # Pedidos cobrem no máximo quatro períodos Γ.
    assert 1 <= len(emitidos) <= 4
    intervalos = sorted((t.interval for _, _, t in emitidos), key=lambda i: i.start)
    assert all(a.end <= b.start for a, b in zip(intervalos, intervalos[1:]))
    recusados_antigo = [
        r for (_, (ltc, _), _), r in zip(pedidos, resultados) if ltc is antigo
    ]
    assert all(isinstance(t, RevokedCredential) for _, _, t in recusados_antigo)

    pca = implantacao.authorities['pca-a-1']
    for destino, rnd, ticket in emitidos:
        if destino == 'pca-a-1':
            inicio = ticket.interval.start
            saidas = pca_services.issue_pseudonyms(
                pca, rnd, Interval(inicio, inicio + TAU), ticket, [make_csr(crypto.generate_keypair())]
            )
            assert saidas[0].ok
    assert sybil_scan(implantacao.snapshots()).ok
