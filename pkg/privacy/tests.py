import json
from io import StringIO

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from conftest import T0, TAU, novo_veiculo
from core.credentials import Interval
from core.encoding import decode_tagged, encode_tagged
from core.exceptions import MissingGroundTruth, SnapshotMissing

from .collusion import SnapshotSet, collusion_closure, table_conformance
from .linking import anonymity_sets, link_by_lifetime, score_linkage
from .report import analyze
from .transcript import Observation, Owner, Transcript


def transcript(*linhas):
    """linhas: (serial, dono, início, fim), todos emitidos por pca-a-1."""
    return Transcript(
        tuple(Observation(s, 'pca-a-1', Interval(a, b)) for s, _, a, b in linhas),
        tuple(Owner(s, 'pca-a-1', dono) for s, dono, _, _ in linhas),
    )


# --- ligação por tempos de vida ---

def test_veiculo_sozinho_e_ligado_por_inteiro():
    t = transcript((1, 'v1', 0, 300), (2, 'v1', 300, 600), (3, 'v1', 600, 900))
    assert link_by_lifetime(t) == [(('pca-a-1', 1), ('pca-a-1', 2), ('pca-a-1', 3))]
    score = score_linkage(link_by_lifetime(t), t)
    assert (score.proposed_links, score.correct_links, score.true_links) == (2, 2, 2)
    assert score.precision == 1.0 and score.recall == 1.0
    assert score.mean_anonymity_set == 1.0


def test_trocas_sincronizadas_impedem_a_ligacao():
    t = transcript((1, 'v1', 0, 300), (2, 'v1', 300, 600), (3, 'v2', 0, 300), (4, 'v2', 300, 600))
    chains = link_by_lifetime(t)
    assert len(chains) == 4
    score = score_linkage(chains, t)
    assert score.precision is None
    assert score.recall == 0.0
    assert score.mean_anonymity_set == 2.0
    assert anonymity_sets(t) == {0: 2, 300: 2}


def test_ligacao_errada_baixa_a_precisao():
    # v1 some em 300 e v2 aparece em 300: o observador liga os dois.
    t = transcript((1, 'v1', 0, 300), (2, 'v2', 300, 600))
    score = score_linkage(link_by_lifetime(t), t)
    assert score.proposed_links == 1
    assert score.precision == 0.0
    assert score.recall is None


def test_particao_e_deterministica_e_cobre_tudo():
    t = transcript((5, 'v1', 0, 300), (2, 'v2', 150, 450), (7, 'v1', 300, 600))
    chains = link_by_lifetime(t)
    assert chains == link_by_lifetime(Transcript(tuple(reversed(t.observations)), t.ground_truth))
    chaves = [k for chain in chains for k in chain]
    assert sorted(chaves) == sorted(o.key for o in t.observations)


def test_pontuacao_exige_os_donos():
    t = transcript((1, 'v1', 0, 300)).without_ground_truth()
    with pytest.raises(MissingGroundTruth):
        score_linkage(link_by_lifetime(t), t)
    assert analyze(t)['linkage'] is None


def test_dez_veiculos_com_trocas_proprias_sao_ligados_por_inteiro():
    # Cada veículo troca em instantes só dele (resíduo i módulo τ).
    linhas = [
        (100 * i + k, f'v{i}', T0 + i + k * TAU, T0 + i + (k + 1) * TAU)
        for i in range(10) for k in range(4)
    ]
    t = transcript(*linhas)
    score = score_linkage(link_by_lifetime(t), t)
    assert score.true_links == 30
    assert score.recall == 1.0
    assert score.precision == 1.0


@pytest.mark.django_db
def test_dez_veiculos_na_grade_tau_nao_sao_ligados(implantacao):
    observacoes, donos = [], []
    for i in range(10):
        veiculo = novo_veiculo(implantacao, f'veiculo-grade-{i}')
        # Pedidos desalinhados de propósito: a PCA alinha todos à mesma grade.
        pedido = Interval(T0 + 13 * i + 1, T0 + 13 * i + 601)
        veiculo.acquire_ticket('pca-a-1', pedido)
        assert veiculo.acquire_pseudonyms('pca-a-1', pedido) == 3
        for entry in veiculo.pool:
            p = entry.pseudonym
            observacoes.append(Observation(p.serial, p.issuer, p.interval))
            donos.append(Owner(p.serial, p.issuer, f'veiculo-grade-{i}'))
    t = Transcript(tuple(observacoes), tuple(donos))
    assert anonymity_sets(t) == {T0: 10, T0 + TAU: 10, T0 + 2 * TAU: 10}
    score = score_linkage(link_by_lifetime(t), t)
    assert score.true_links == 20
    assert score.recall == 0.0
    assert score.mean_anonymity_set == 10.0


# --- coalizões ---

@pytest.fixture
def cenario_coalizao(implantacao):
    """Um veículo de A usando pca-a-1 e outro de A em roaming por B."""
    local = novo_veiculo(implantacao, 'veiculo-local')
    local.acquire_ticket('pca-a-1', Interval(T0, T0 + 2 * TAU))
    local.acquire_pseudonyms('pca-a-1', Interval(T0, T0 + 2 * TAU))
    visitante = novo_veiculo(implantacao, 'veiculo-visitante')
    visitante.roam('ltca-b', 'pca-b-1', Interval(T0, T0 + 2 * TAU))
    snapshots = SnapshotSet()
    for snap in implantacao.snapshots().values():
        snapshots.add(snap)
    return {'snapshots': snapshots, 'local': local, 'visitante': visitante, 'implantacao': implantacao}


@pytest.mark.django_db
def test_ltca_sozinha_conhece_identidades_mas_nao_pseudonimos(cenario_coalizao):
    knowledge = collusion_closure(('LTCA_A',), cenario_coalizao['snapshots'])
    assert {'veiculo-local', 'veiculo-visitante'} <= knowledge.identities
    assert not knowledge.ticket_links
    assert not knowledge.links_identities


@pytest.mark.django_db
def test_pca_sozinha_so_agrupa_pseudonimos_pelo_ticket(cenario_coalizao):
    knowledge = collusion_closure(('PCA_A',), cenario_coalizao['snapshots'])
    assert not knowledge.identities
    assert len(knowledge.ticket_links) == 2
    assert list(map(len, knowledge.request_groups().values())) == [2]
    assert not knowledge.links_identities


@pytest.mark.django_db
def test_ltca_e_pca_do_mesmo_dominio_ligam_o_veiculo(cenario_coalizao):
    knowledge = collusion_closure(('LTCA_A', 'PCA_A'), cenario_coalizao['snapshots'])
    serials = {e.pseudonym.serial for e in cenario_coalizao['local'].pool}
    assert knowledge.id_links == {('veiculo-local', ('pca-a-1', s)) for s in serials}


@pytest.mark.django_db
def test_roaming_so_se_liga_com_as_duas_ltcas(cenario_coalizao):
    snapshots = cenario_coalizao['snapshots']
    assert not collusion_closure(('LTCA_B', 'PCA_B'), snapshots).links_identities
    knowledge = collusion_closure(('LTCA_A', 'LTCA_B', 'PCA_B'), snapshots)
    assert {subject for subject, _ in knowledge.id_links} == {'veiculo-visitante'}
    assert len(knowledge.exchange_links) == 1


@pytest.mark.django_db
def test_tabela_de_conhecimento_confere(cenario_coalizao):
    rows = table_conformance(cenario_coalizao['snapshots'])
    assert len(rows) == 6
    assert all(row['conforms'] for row in rows)


@pytest.mark.django_db
def test_tokens_de_entidade(cenario_coalizao):
    snapshots = cenario_coalizao['snapshots']
    assert snapshots.resolve('PCA_A1') == {'pca-a-1'}
    assert snapshots.resolve('ltca-b') == {'ltca-b'}
    for token in ('PCA_A2', 'LTCA_Z', 'diretorio'):
        with pytest.raises(SnapshotMissing):
            snapshots.resolve(token)


@pytest.mark.django_db
def test_snapshots_lidos_do_diretorio(tmp_path, cenario_coalizao):
    for ca_id, snap in cenario_coalizao['implantacao'].snapshots().items():
        (tmp_path / f'{ca_id}.snap').write_bytes(encode_tagged(snap))
    loaded = SnapshotSet.load(tmp_path)
    assert set(loaded.ltcas) == {'ltca-a', 'ltca-b'}
    assert set(loaded.pcas) == {'pca-a-1', 'pca-b-1'}

    (tmp_path / 'lixo.snap').write_bytes(b'\x00\x01')
    with pytest.raises(SnapshotMissing):
        SnapshotSet.load(tmp_path)


# --- comando ---

@pytest.mark.django_db
def test_comando_gera_relatorio(tmp_path, cenario_coalizao):
    snap_dir = tmp_path / 'snapshots'
    snap_dir.mkdir()
    for ca_id, snap in cenario_coalizao['implantacao'].snapshots().items():
        (snap_dir / f'{ca_id}.snap').write_bytes(encode_tagged(snap))
    events = cenario_coalizao['local'].events + cenario_coalizao['visitante'].events
    transcript_path = tmp_path / 'transcript.bin'
    transcript_path.write_bytes(encode_tagged(Transcript.from_events(events)))
    assert len(decode_tagged(transcript_path.read_bytes(), Transcript).observations) == 4

    out = StringIO()
    call_command(
        'privacy', 'analyze',
        '--transcript', str(transcript_path),
        '--snapshots', str(snap_dir),
        '--collude', 'LTCA_A,PCA_A',
        '--table',
        '--out', str(tmp_path / 'report.json'),
        stdout=out,
    )
    report = json.loads((tmp_path / 'report.json').read_text())
    assert report['observations'] == 4
    assert report['collusion'][0]['links_identities'] is True
    assert all(row['conforms'] for row in report['table'])
    assert 'Relatório gravado' in out.getvalue()


def test_comando_coalizao_sem_snapshots(tmp_path):
    path = tmp_path / 'transcript.bin'
    path.write_bytes(encode_tagged(transcript((1, 'v1', 0, 300))))
    with pytest.raises(CommandError):
        call_command(
            'privacy', 'analyze', '--transcript', str(path), '--collude', 'LTCA_A',
            '--out', str(tmp_path / 'r.json'),
        )
