import json
import struct
from types import SimpleNamespace

import pytest

from conftest import GAMMA, T0, TAU, novo_veiculo
from core.credentials import Interval
from core.exceptions import (
    ScenarioInvalid,
    ServiceUnavailable,
    TicketBindingMismatch,
    TicketInvalid,
    TicketReused,
)
from ltca import services as ltca_services

from .walkthrough import Walkthrough, load_walkthrough, run_walkthrough


def empacotar(interval):
    return struct.pack('>QQ', interval.start, interval.end)


@pytest.mark.django_db
def test_cada_servidor_ve_so_a_sua_parte(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-discreto')
    sub = Interval(T0 + TAU, T0 + 2 * TAU)
    implantacao.transport.start_capture()
    veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + GAMMA))
    veiculo.acquire_pseudonyms('pca-a-1', sub)

    para_ltca = [c.request for c in implantacao.transport.captured('ltca-a')]
    para_pca = [c.request for c in implantacao.transport.captured('pca-a-1')]
    assert len(para_ltca) == 1 and len(para_pca) == 1
    # A LTCA recebe só o digest: nem o id da PCA nem o subintervalo dos pseudônimos.
    assert b'pca-a-1' not in para_ltca[0]
    assert empacotar(sub) not in para_ltca[0]
    # A PCA nunca vê o LTC nem a identidade.
    assert b'veiculo-discreto' not in para_pca[0]
    assert veiculo.ltc.public_key not in para_pca[0]


@pytest.mark.django_db
def test_pool_ordenado_e_sem_sobreposicao(implantacao, relogio):
    veiculo = novo_veiculo(implantacao, 'veiculo-pool')
    veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + GAMMA))
    assert veiculo.acquire_pseudonyms('pca-a-1', Interval(T0, T0 + 3 * TAU)) == 3
    intervalos = [e.pseudonym.interval for e in veiculo.pool]
    assert all(a.end <= b.start for a, b in zip(intervalos, intervalos[1:]))

    relogio.advance(TAU + 10)
    assert veiculo.current_pseudonym().pseudonym.interval == Interval(T0 + TAU, T0 + 2 * TAU)
    assert veiculo.prune() == 1
    assert len(veiculo.pool) == 2
    assert len(veiculo.events) == 3


@pytest.mark.django_db
def test_planejamento_de_slots(veiculo):
    assert veiculo.plan_slots(Interval(T0 + 10, T0 + 610)) == 3
    assert veiculo.plan_slots(Interval(T0, T0 + GAMMA), 'pca-b-1') == GAMMA // TAU


@pytest.mark.django_db
def test_ticket_de_outra_pca_nao_sai_do_veiculo(implantacao, veiculo):
    veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + 600))
    implantacao.transport.start_capture()
    with pytest.raises(TicketBindingMismatch):
        veiculo.acquire_pseudonyms('pca-b-1', Interval(T0, T0 + 600))
    assert implantacao.transport.captured() == []


@pytest.mark.django_db
def test_pseudonimos_sem_ticket(veiculo):
    with pytest.raises(TicketInvalid):
        veiculo.acquire_pseudonyms('pca-a-1', Interval(T0, T0 + 600))


@pytest.mark.django_db
def test_atualizacao_do_ltc_troca_a_chave(veiculo):
    chave_antiga = veiculo.keypair.public
    ltc = veiculo.update_ltc()
    assert ltc.public_key != chave_antiga
    assert veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + 300)).ticket.issuer == 'ltca-a'


# --- roaming ---

@pytest.mark.django_db
def test_roaming_completo(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-viagem')
    assert veiculo.roam('ltca-b', 'pca-b-1', Interval(T0, T0 + 600)) == 2
    assert {e.pseudonym.issuer for e in veiculo.pool} == {'pca-b-1'}


@pytest.mark.django_db
def test_roaming_so_mostra_o_subintervalo_a_pca(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-viagem')
    sub = Interval(T0 + TAU, T0 + 3 * TAU)
    implantacao.transport.start_capture()
    assert veiculo.roam('ltca-b', 'pca-b-1', sub) == 2

    for ltca in ('ltca-a', 'ltca-b'):
        pedidos = [c.request for c in implantacao.transport.captured(ltca)]
        assert len(pedidos) == 1
        # As LTCAs veem só o período da grade de tickets, nunca o subintervalo nem a PCA.
        assert empacotar(sub) not in pedidos[0]
        assert empacotar(Interval(T0, T0 + GAMMA)) in pedidos[0]
        assert b'pca-b-1' not in pedidos[0]
    assert b'ltca-b' not in implantacao.transport.captured('ltca-a')[0].request
    assert empacotar(sub) in implantacao.transport.captured('pca-b-1')[0].request
    assert all(e.pseudonym.interval.within(sub) for e in veiculo.pool)


@pytest.mark.django_db
def test_ltca_estrangeira_fora_do_ar_mantem_o_f_tkt(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-viagem')
    intervalo = Interval(T0, T0 + 600)
    f_tkt = veiculo.acquire_ticket('ltca-b', intervalo)
    implantacao.transport.crash('ltca-b')
    with pytest.raises(ServiceUnavailable):
        veiculo.exchange_ticket('ltca-b', 'pca-b-1', intervalo)
    assert veiculo.current_ticket == f_tkt
    implantacao.transport.restore('ltca-b')
    assert veiculo.exchange_ticket('ltca-b', 'pca-b-1', intervalo).ticket.issuer == 'ltca-b'


@pytest.mark.django_db
def test_f_tkt_ja_trocado_e_descartado(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-viagem')
    intervalo = Interval(T0, T0 + 600)
    f_tkt = veiculo.acquire_ticket('ltca-b', intervalo)
    ltca_services.exchange_foreign_ticket(
        implantacao.authorities['ltca-b'], f_tkt.ticket, f_tkt.rnd, bytes(32), intervalo
    )
    with pytest.raises(TicketReused):
        veiculo.exchange_ticket('ltca-b', 'pca-b-1', intervalo)
    assert veiculo.current_ticket is None


# --- roteiro ---

@pytest.mark.django_db
def test_roteiro_executa_os_passos(implantacao):
    veiculo = novo_veiculo(implantacao, 'veiculo-roteiro', enroll=False)
    roteiro = Walkthrough.model_validate({
        'subject_id': 'veiculo-roteiro',
        'steps': [
            {'op': 'enroll', 'start': T0 - 60, 'end': T0 + 86400},
            {'op': 'ticket', 'pca': 'pca-a-1', 'start': T0, 'end': T0 + 600},
            {'op': 'pseudonyms', 'pca': 'pca-a-1', 'start': T0, 'end': T0 + 600},
            {'op': 'crl', 'pca': 'pca-a-1'},
            {'op': 'status', 'pca': 'pca-a-1', 'serial': 999_999},
            {'op': 'advance', 'seconds': 600},
            {'op': 'status', 'pca': 'pca-a-1', 'serial': 999_999},
        ],
    })
    linhas = []
    assert run_walkthrough(veiculo, roteiro, out=linhas.append) == 1
    assert linhas[2] == '[3] pseudonyms: 2 pseudônimos'
    assert linhas[4] == '[5] status: UNKNOWN'
    assert 'Unauthorized' in linhas[6]


def test_roteiro_invalido(tmp_path):
    path = tmp_path / 'roteiro.json'
    path.write_text(json.dumps({'subject_id': 'v', 'steps': [{'op': 'voar'}]}))
    with pytest.raises(ScenarioInvalid):
        load_walkthrough(path)


def test_passo_sem_intervalo():
    roteiro = Walkthrough.model_validate({'subject_id': 'v', 'steps': [{'op': 'enroll'}]})
    linhas = []
    assert run_walkthrough(SimpleNamespace(enroll=lambda validity: None), roteiro, out=linhas.append) == 1
    assert 'ScenarioInvalid' in linhas[0]
