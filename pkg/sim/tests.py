import json
import threading
from io import StringIO
from types import SimpleNamespace

import numpy as np
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError
from pydantic import ValidationError

from core.clock import ManualClock
from core.credentials import Interval
from core.encoding import decode_tagged
from core.exceptions import IoError, ScenarioInvalid
from core.wire import MsgType
from ltca.snapshot import LedgerRow, LtcaSnapshot
from pca.models import IssuedPseudonym
from privacy.transcript import Transcript

from .bench import run_bench
from .deployment import Deployment
from .metrics import (
    MetricCollector,
    MetricRecord,
    export,
    failover_window,
    perf_sanity,
    ramp_shape,
    summarize,
)
from .monitors import attack_rejections, pool_disjointness, sybil_scan
from .runner import Harness, ramp
from .scenario import FaultSpec, Scenario, load_scenario, two_domain_topology
from .workload import (
    AttackEvent,
    FaultEvent,
    VehicleEvent,
    attacker_workload,
    build_schedule,
    fault_events,
    forge_request,
    poisson_arrivals,
)


def cenario_pequeno(**kwargs):
    """Poucos veículos, lotes de 5 pseudônimos (300 s com τ = 60 s) e um worker só.

    A duração fica abaixo da tolerância de relógio: o despachante adianta o
    relógio manual enquanto o worker ainda atende o pedido anterior.
    """
    params = dict(
        vehicles=4, frequency_per_hour=60, pseudonyms_per_request=5, sub_interval_seconds=300,
        duration_seconds=240, workers=1, resolution_sample=1.0, seed=3,
    )
    params.update(kwargs)
    return Scenario(**params)


# --- cenário ---

def test_cenario_padrao_tem_dois_dominios():
    scenario = Scenario()
    assert [d.name for d in scenario.topology.domains] == ['A', 'B']
    assert scenario.topology.domains[0].policy.slots_per_ticket == 100


def test_falha_em_servidor_desconhecido():
    with pytest.raises(ValidationError):
        Scenario(faults=[FaultSpec(server='pca-z-1', at=10)])


def test_falha_em_replica():
    scenario = Scenario(topology=two_domain_topology(pca_replicas=2), faults=[FaultSpec(server='pca-a-1#1', at=5)])
    assert scenario.faults[0].server == 'pca-a-1#1'


def test_restauracao_antes_da_queda():
    with pytest.raises(ValidationError):
        FaultSpec(server='ltca-a', at=10, restore_at=5)


def test_roaming_exige_dois_dominios():
    topology = two_domain_topology().model_copy(update={'domains': two_domain_topology().domains[:1]})
    with pytest.raises(ValidationError):
        Scenario(topology=topology, roaming_fraction=0.5)


def test_arquivo_de_cenario_invalido(tmp_path):
    path = tmp_path / 'cenario.json'
    path.write_text('{"vehicles": -1}')
    with pytest.raises(ScenarioInvalid):
        load_scenario(path)
    with pytest.raises(ScenarioInvalid):
        load_scenario(tmp_path / 'nao-existe.json')
    path.write_text('{ quebrado')
    with pytest.raises(ScenarioInvalid):
        load_scenario(path)


# --- agenda ---

def test_chegadas_de_poisson():
    assert poisson_arrivals(np.random.default_rng(0), 0, 1000) == []
    times = poisson_arrivals(np.random.default_rng(0), 3600, 36_000)
    assert all(0 <= t < 36_000 for t in times)
    assert times == sorted(times)
    assert 34_200 < len(times) < 37_800


def test_agenda_reprodutivel_pela_semente():
    scenario = Scenario(vehicles=3, frequency_per_hour=60, duration_seconds=600, attackers=1,
                        attacker_frequency_per_hour=60, seed=7)
    schedule = build_schedule(scenario)
    assert schedule == build_schedule(scenario)
    assert schedule != build_schedule(scenario.model_copy(update={'seed': 8}))
    assert [e.at for e in schedule] == sorted(e.at for e in schedule)
    assert {type(e) for e in schedule} == {VehicleEvent, AttackEvent}


def test_roaming_vai_para_dominio_estrangeiro():
    scenario = Scenario(vehicles=4, frequency_per_hour=60, duration_seconds=3600, roaming_fraction=1.0)
    events = [e for e in build_schedule(scenario) if isinstance(e, VehicleEvent)]
    assert events and all(e.roam for e in events)
    assert all(e.foreign_domain != ('A', 'B')[e.vehicle % 2] for e in events)


def test_atacante_misto_sorteia_os_dois_tipos():
    events = attacker_workload('mixed', 3600, 3600, np.random.default_rng(1), domains=('A', 'B'))
    assert {e.kind for e in events} == {'fake_ltc', 'fake_ticket'}
    assert {e.domain for e in events} == {'A', 'B'}
    assert attacker_workload('fake_ltc', 0, 3600, np.random.default_rng(1)) == []


def test_falhas_viram_queda_e_restauracao():
    scenario = Scenario(faults=[FaultSpec(server='ltca-a', at=10, restore_at=20), FaultSpec(server='pca-b-1', at=5)])
    assert fault_events(scenario) == [
        FaultEvent(10, 'ltca-a', 'crash'), FaultEvent(20, 'ltca-a', 'restore'), FaultEvent(5, 'pca-b-1', 'crash'),
    ]


def test_pedidos_forjados_miram_a_autoridade_certa():
    topology = two_domain_topology()
    ltc = forge_request(AttackEvent(0, 0, 'fake_ltc', 'B'), topology, 1_800_000_000, 6000)
    assert (ltc.server_id, ltc.msg_type, ltc.auth is not None) == ('ltca-b', MsgType.TICKET_REQ, True)
    assert ltc.body.ltc.issuer == 'ltca-b'
    tkt = forge_request(AttackEvent(0, 0, 'fake_ticket', 'A'), topology, 1_800_000_000, 6000)
    assert (tkt.server_id, tkt.msg_type) == ('pca-a-1', MsgType.PSNYM_REQ)
    assert tkt.body.ticket.issuer == 'ltca-a'


# --- métricas ---

def test_registro_nao_termina_antes_de_comecar():
    with pytest.raises(ValueError):
        MetricRecord('ticket', 'ltca-a', 10, 5)


def test_resumo_com_quantis():
    records = [MetricRecord('ticket', 'ltca-a', 0, i * 1000) for i in range(1, 101)]
    records.append(MetricRecord('ticket', 'ltca-a', 0, 1, 'OverlappingTicket'))
    entry = summarize(records)['ticket']
    assert entry['count'] == 100
    assert entry['failures'] == {'OverlappingTicket': 1}
    assert entry['p50'] == pytest.approx(50.5)
    assert entry['p99'] == pytest.approx(99.01)
    assert entry['max'] == 100.0
    assert len(entry['cdf']) == 100 and entry['cdf'][-1] == [1.0, 100.0]


def test_operacao_so_com_falhas_nao_tem_quantis():
    entry = summarize([MetricRecord('attack_fake_ltc', 'ltca-a', 0, 5, 'BadSignature')])['attack_fake_ltc']
    assert entry == {'count': 0, 'failures': {'BadSignature': 1}}


def test_coletor_junta_as_threads_e_propaga_excecoes():
    collector = MetricCollector()

    def falha():
        raise ScenarioInvalid('x')

    with pytest.raises(ScenarioInvalid):
        collector.timed('enroll', 'ltca-a', falha)
    threads = [threading.Thread(target=collector.timed, args=('ticket', 'ltca-a', lambda: None)) for _ in range(3)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    outcomes = sorted(r.outcome for r in collector.records())
    assert outcomes == ['ScenarioInvalid', 'ok', 'ok', 'ok']


def test_exportacao_das_metricas(tmp_path):
    records = [MetricRecord('ticket', 'ltca-a', 0, 2000), MetricRecord('ticket', 'ltca-a', 10, 4010)]
    report = SimpleNamespace(records=records, summary=summarize(records), as_dict=lambda: {'ok': True})
    written = export(report, tmp_path / 'out')
    assert {p.name for p in written} == {'latencies.csv', 'summary.json', 'cdf_ticket.dat'}
    linhas = (tmp_path / 'out' / 'latencies.csv').read_text().splitlines()
    assert linhas[0] == 'op,server,start_us,end_us,outcome'
    assert len(linhas) == 3

    arquivo = tmp_path / 'arquivo'
    arquivo.write_text('')
    with pytest.raises(IoError):
        export(report, arquivo)


def test_janela_de_failover():
    antes = [MetricRecord('issuance', 'pca-a-1', i * 1000, i * 1000 + 10_000) for i in range(20)]
    queda = 100_000
    durante = [MetricRecord('issuance', 'pca-a-1', 101_000, 150_000, 'ServiceUnavailable')]
    depois = [MetricRecord('issuance', 'pca-a-1', 200_000 + i, 200_000 + i + 15_000) for i in range(20)]
    window = failover_window(antes + durante + depois, 'pca-a-1#0', queda, recovery_us=50_000)
    assert window.before_p95_ms == pytest.approx(10.0)
    assert window.after_p95_ms == pytest.approx(15.0)
    assert (window.after_requests, window.after_success_rate) == (20, 1.0)
    assert window.recovered()
    assert not window.recovered(max_p95_ratio=1.2)
    # Sem janela de recuperação a falha durante a queda entra na conta.
    assert not failover_window(antes + durante + depois, 'pca-a-1#0', queda, recovery_us=0).recovered()


def test_forma_da_rampa():
    def linha(taxa, aceitos=0):
        return {'served_per_second': taxa, 'attacks_accepted': aceitos}

    boa = ramp_shape([linha(10.0), linha(10.5), linha(8.0), linha(6.0)])
    assert boa['monotone'] and boa['ok']
    assert boa['drop'] == pytest.approx(0.4)
    assert not ramp_shape([linha(10.0), linha(12.0), linha(6.0)])['monotone']
    assert not ramp_shape([linha(10.0), linha(9.0), linha(8.0)])['ok']
    assert not ramp_shape([linha(10.0), linha(5.0, aceitos=1)])['ok']


def test_medianas_contra_a_referencia():
    records = [MetricRecord('ticket', 'ltca-a', 0, 3000), MetricRecord('ticket', 'ltca-a', 0, 70_000),
               MetricRecord('ticket', 'ltca-a', 0, 4000), MetricRecord('pca_10', 'pca-a-1', 0, 300_000)]
    checks = perf_sanity(summarize(records))
    assert set(checks) == {'ticket', 'pca_10'}
    assert checks['ticket'] == {'median_ms': 4.0, 'reference_ms': 5.0, 'limit_ms': 50.0, 'ok': True}
    assert not checks['pca_10']['ok']


# --- monitores ---

def test_varredura_acha_tickets_sobrepostos():
    def linha(serial, start, end):
        return LedgerRow(serial, 'veiculo-1', Interval(start, end), bytes(32), 0)

    snap = LtcaSnapshot('ltca-a', 'A', ('veiculo-1',), (linha(1, 0, 600), linha(2, 300, 900)), ())
    result = sybil_scan({'ltca-a': snap})
    assert not result.ok and 'veiculo-1' in result.violations[0]
    limpo = LtcaSnapshot('ltca-a', 'A', ('veiculo-1',), (linha(1, 0, 600), linha(2, 600, 900)), ())
    assert sybil_scan({'ltca-a': limpo}).ok


def test_pool_sobreposto_dispara():
    evento = lambda a, b: SimpleNamespace(interval=Interval(a, b))  # noqa: E731
    bom = SimpleNamespace(subject_id='v1', events=[evento(0, 60), evento(60, 120)])
    ruim = SimpleNamespace(subject_id='v2', events=[evento(0, 60), evento(30, 90)])
    assert pool_disjointness([bom]).ok
    result = pool_disjointness([bom, ruim])
    assert result.checked == 4 and len(result.violations) == 1


def test_ataque_aceito_dispara():
    rejeitado = MetricRecord('attack_fake_ltc', 'ltca-a', 0, 1, 'BadSignature')
    assert attack_rejections([rejeitado, MetricRecord('ticket', 'ltca-a', 0, 1)]).ok
    assert not attack_rejections([MetricRecord('attack_fake_ticket', 'pca-a-1', 0, 1)]).ok


# --- rodada ---

@pytest.mark.django_db(transaction=True)
def test_rodada_completa_com_roaming_e_atacantes(tmp_path):
    scenario = cenario_pequeno(roaming_fraction=0.5, attackers=1, attacker_frequency_per_hour=120)
    schedule = build_schedule(scenario)
    pedidos = sum(isinstance(e, VehicleEvent) for e in schedule)
    ataques = sum(isinstance(e, AttackEvent) for e in schedule)

    harness = Harness(scenario, ManualClock(scenario.start_time))
    report = harness.run()

    assert report.ok, {m.name: m.violations for m in report.monitors}
    assert report.served == pedidos
    assert report.issued == 5 * pedidos
    attack_records = [r for r in report.records if r.op.startswith('attack_')]
    assert len(attack_records) == ataques and not any(r.ok for r in attack_records)
    monitors = {m.name: m for m in report.monitors}
    assert monitors['resolution'].checked == report.issued

    written = harness.write_outputs(report, tmp_path)
    assert (tmp_path / 'summary.json') in written
    summary = json.loads((tmp_path / 'summary.json').read_text())
    assert summary['pseudonyms_issued'] == report.issued
    transcript = decode_tagged((tmp_path / 'transcript.bin').read_bytes(), Transcript)
    assert len(transcript.observations) == report.issued
    assert {p.name for p in (tmp_path / 'snapshots').iterdir()} == {
        'ltca-a.snap', 'ltca-b.snap', 'pca-a-1.snap', 'pca-b-1.snap',
    }


@pytest.mark.django_db(transaction=True)
def test_queda_programada_aparece_nas_falhas():
    scenario = cenario_pequeno(vehicles=2, faults=[FaultSpec(server='pca-a-1', at=0)], resolution_sample=0)
    report = Harness(scenario, ManualClock(scenario.start_time)).run()
    falhas = report.summary.get('pseudonyms', {}).get('failures', {})
    domestic_a = [e for e in build_schedule(scenario) if isinstance(e, VehicleEvent) and e.vehicle % 2 == 0]
    assert falhas.get('ServiceUnavailable', 0) == len(domestic_a)
    assert report.ok


@pytest.mark.django_db(transaction=True)
def test_rampa_de_um_nivel():
    scenario = cenario_pequeno(vehicles=2, resolution_sample=0)
    rows = ramp(scenario, [2], clock_factory=lambda: ManualClock(scenario.start_time))
    assert len(rows) == 1
    assert rows[0]['attackers'] == 2
    assert rows[0]['attacks_accepted'] == 0
    assert rows[0]['ok']


@pytest.mark.django_db(transaction=True)
def test_queda_de_replica_nao_derruba_a_emissao():
    scenario = cenario_pequeno(
        topology=two_domain_topology(pca_replicas=2), faults=[FaultSpec(server='pca-a-1#0', at=120)],
        resolution_sample=0,
    )
    report = Harness(scenario, ManualClock(scenario.start_time)).run()
    [window] = report.failover(recovery_seconds=0)
    assert window.server == 'pca-a-1#0'
    assert window.after_requests > 0
    assert window.after_success_rate == 1.0
    assert report.as_dict()['failover'][0]['after_success_rate'] == 1.0
    assert not any(r for r in report.records if r.op == 'issuance' and not r.ok)


@pytest.mark.django_db(transaction=True)
def test_rampa_de_varios_niveis_recusa_todos_os_ataques():
    scenario = cenario_pequeno(vehicles=2, resolution_sample=0, attacker_frequency_per_hour=240)
    rows = ramp(
        scenario, [0, 2, 4], clock_factory=lambda: ManualClock(scenario.start_time),
        # Cada nível começa com o banco vazio, como o comando faz com um arquivo novo.
        prepare=lambda level: call_command('flush', interactive=False, verbosity=0),
    )
    assert [r['attackers'] for r in rows] == [0, 2, 4]
    assert rows[0]['attack_requests'] == 0
    assert rows[1]['attack_requests'] < rows[2]['attack_requests']
    shape = ramp_shape(rows)
    assert shape['attacks_rejected']
    assert all(r['ok'] for r in rows)


@pytest.mark.django_db
def test_bench_mede_as_tres_emissoes():
    deployment = Deployment(two_domain_topology(), ManualClock(1_800_000_000), seed=1)
    checks = run_bench(deployment, rounds=3)
    summary = checks.pop('summary')
    assert set(checks) == {'ticket', 'issuance_100', 'pca_10'}
    assert summary['ticket']['count'] == 3 and summary['pca_10']['count'] == 3
    assert all(check['ok'] for check in checks.values()), checks
    assert IssuedPseudonym.objects.filter(authority='pca-a-1').count() == 3 * 110


# --- comando ---

def test_comando_imprime_o_schema():
    out = StringIO()
    call_command('sim', 'schema', stdout=out)
    schema = json.loads(out.getvalue())
    assert {'vehicles', 'attackers', 'faults', 'topology'} <= set(schema['properties'])


def test_comando_recusa_cenario_invalido(tmp_path):
    path = tmp_path / 'cenario.json'
    path.write_text(json.dumps({'vehicles': 1, 'desconhecido': True}))
    with pytest.raises(CommandError):
        call_command('sim', 'run', str(path), '--out', str(tmp_path / 'out'))
