import pytest
from django.contrib.auth.models import User
from django.core.management import call_command

from conftest import T0, novo_veiculo
from core import crypto
from core.channels import Channel
from core.credentials import Interval
from core.exceptions import ForeignUnreachable, RevokedCredential, Unauthorized, UnknownPseudonym
from core.wire import MsgType
from pca import services as pca_services

from . import services
from .messages import ResolutionRequest, ResolutionResponse
from .models import AuditLogEntry, OperatorKey


@pytest.fixture
def cenario_resolucao(implantacao):
    """Um veículo do domínio A com dois pseudônimos de pca-a-1."""
    veiculo = novo_veiculo(implantacao, 'veiculo-ra')
    veiculo.acquire_ticket('pca-a-1', Interval(T0, T0 + 600))
    veiculo.acquire_pseudonyms('pca-a-1', Interval(T0, T0 + 600))
    return {'ra': implantacao.authorities['ra-a'], 'veiculo': veiculo, 'serial': veiculo.pool[0].pseudonym.serial}


@pytest.fixture
def cenario_roaming(implantacao):
    """Veículo do domínio A com pseudônimos emitidos no domínio B."""
    veiculo = novo_veiculo(implantacao, 'veiculo-visitante')
    veiculo.roam('ltca-b', 'pca-b-1', Interval(T0, T0 + 600))
    return {'ra': implantacao.authorities['ra-b'], 'veiculo': veiculo, 'serial': veiculo.pool[0].pseudonym.serial}


def pedido(issuer, serial, **kwargs):
    return ResolutionRequest(issuer, serial, 'investigação de incidente', **kwargs)


@pytest.mark.django_db
def test_resolucao_no_dominio(implantacao, cenario_resolucao, operador_ra):
    found = services.resolve(
        cenario_resolucao['ra'], implantacao.transport, pedido('pca-a-1', cenario_resolucao['serial']), operador_ra
    )
    assert (found.subject_id, found.home_ltca) == ('veiculo-ra', 'ltca-a')
    assert [(s['op'], s['server']) for s in found.steps] == [('map_psnym', 'pca-a-1'), ('resolve_ticket', 'ltca-a')]
    entry = AuditLogEntry.objects.get()
    assert entry.outcome == AuditLogEntry.Outcome.OK
    assert entry.operator == 'operador_teste'
    assert entry.subject_id == 'veiculo-ra'


@pytest.mark.django_db
def test_resolucao_com_revogacao_e_idempotente(implantacao, cenario_resolucao, operador_ra):
    request = pedido('pca-a-1', cenario_resolucao['serial'], revoke_pseudonyms=True)
    primeira = services.resolve(cenario_resolucao['ra'], implantacao.transport, request, operador_ra)
    segunda = services.resolve(cenario_resolucao['ra'], implantacao.transport, request, operador_ra)
    assert primeira.pseudonyms_revoked == 2
    assert segunda.pseudonyms_revoked == 0
    assert segunda.subject_id == primeira.subject_id
    crl = pca_services.get_crl(implantacao.authorities['pca-a-1'])
    assert set(crl.entries) == {e.pseudonym.serial for e in cenario_resolucao['veiculo'].pool}
    assert AuditLogEntry.objects.count() == 2


@pytest.mark.django_db
def test_resolucao_revogando_o_ltc(implantacao, cenario_resolucao, operador_ra):
    request = pedido('pca-a-1', cenario_resolucao['serial'], revoke_ltc=True)
    found = services.resolve(cenario_resolucao['ra'], implantacao.transport, request, operador_ra)
    assert found.ltc_revoked
    with pytest.raises(RevokedCredential):
        cenario_resolucao['veiculo'].acquire_ticket('pca-a-1', Interval(T0 + 3600, T0 + 3900))


@pytest.mark.django_db
def test_resolucao_de_veiculo_em_roaming(implantacao, cenario_roaming, operador_ra):
    found = services.resolve(
        cenario_roaming['ra'], implantacao.transport, pedido('pca-b-1', cenario_roaming['serial']), operador_ra
    )
    assert (found.subject_id, found.home_ltca) == ('veiculo-visitante', 'ltca-a')
    assert [s['server'] for s in found.steps] == ['pca-b-1', 'ltca-b', 'ltca-a']


@pytest.mark.django_db
def test_origem_fora_do_ar_da_resolucao_parcial(implantacao, cenario_roaming, operador_ra):
    implantacao.transport.crash('ltca-a')
    with pytest.raises(ForeignUnreachable) as info:
        services.resolve(
            cenario_roaming['ra'], implantacao.transport, pedido('pca-b-1', cenario_roaming['serial']), operador_ra
        )
    assert info.value.home_issuer == 'ltca-a'
    assert info.value.foreign_serial > 0
    entry = AuditLogEntry.objects.get()
    assert entry.outcome == AuditLogEntry.Outcome.PARTIAL
    assert entry.home_ltca == 'ltca-a'
    assert entry.steps[-1]['error'] == 'ServiceUnavailable'


@pytest.mark.django_db
def test_pseudonimo_desconhecido_fica_na_auditoria(implantacao, cenario_resolucao, operador_ra):
    with pytest.raises(UnknownPseudonym):
        services.resolve(cenario_resolucao['ra'], implantacao.transport, pedido('pca-a-1', 999_999), operador_ra)
    entry = AuditLogEntry.objects.get()
    assert entry.outcome == AuditLogEntry.Outcome.FAILED
    assert 'UnknownPseudonym' in entry.detail


@pytest.mark.django_db
def test_usuario_sem_permissao_nao_resolve(implantacao, cenario_resolucao):
    curioso = User.objects.create_user(username='curioso')
    with pytest.raises(PermissionError):
        services.resolve(
            cenario_resolucao['ra'], implantacao.transport, pedido('pca-a-1', cenario_resolucao['serial']), curioso
        )
    with pytest.raises(PermissionError):
        services.audit_log(cenario_resolucao['ra'], 0, curioso)
    negada = AuditLogEntry.objects.get()
    assert negada.outcome == AuditLogEntry.Outcome.DENIED
    assert negada.operator == 'curioso'
    assert negada.steps == []
    assert negada.subject_id == ''


@pytest.mark.django_db
def test_tentativa_sem_operador_fica_na_auditoria(implantacao, cenario_resolucao):
    with pytest.raises(PermissionError):
        services.resolve(
            cenario_resolucao['ra'], implantacao.transport, pedido('pca-a-1', cenario_resolucao['serial']), None
        )
    assert AuditLogEntry.objects.get().operator == ''


def test_pedido_sem_justificativa():
    with pytest.raises(ValueError):
        ResolutionRequest('pca-a-1', 1, '   ')


@pytest.mark.django_db
def test_auditoria_so_aceita_insercao(implantacao, cenario_resolucao, operador_ra):
    services.resolve(
        cenario_resolucao['ra'], implantacao.transport, pedido('pca-a-1', cenario_resolucao['serial']), operador_ra
    )
    entry = AuditLogEntry.objects.get()
    entry.justification = 'outra'
    with pytest.raises(PermissionError):
        entry.save()
    with pytest.raises(PermissionError):
        entry.delete()
    assert services.audit_log(cenario_resolucao['ra'], T0, operador_ra) == [AuditLogEntry.objects.get()]
    assert services.audit_log(cenario_resolucao['ra'], T0 + 1, operador_ra) == []


@pytest.mark.django_db
def test_todo_pseudonimo_emitido_resolve_para_o_seu_veiculo(implantacao, operador_ra):
    """Veículos nativos e em roaming dos dois domínios: nenhuma resolução falha ou troca de dono."""
    periodo = Interval(T0, T0 + 3600)
    esperados = {}
    frota = (
        [('A', None)] * 8 + [('B', None)] * 8
        + [('A', ('ltca-b', 'pca-b-1'))] * 8 + [('B', ('ltca-a', 'pca-a-1'))] * 4
    )
    for i, (dominio, destino) in enumerate(frota):
        subject = f'frota-{dominio}-{i}'
        veiculo = novo_veiculo(implantacao, subject, domain=dominio)
        if destino is None:
            pca = implantacao.topology.domain(dominio).pcas[0].id
            veiculo.acquire_ticket(pca, periodo)
            veiculo.acquire_pseudonyms(pca, periodo)
        else:
            veiculo.roam(*destino, periodo)
        home = 'ltca-a' if dominio == 'A' else 'ltca-b'
        for entry in veiculo.pool:
            esperados[(entry.pseudonym.issuer, entry.pseudonym.serial)] = (subject, home)
    assert len(esperados) == len(frota) * 12

    ras = {'pca-a-1': implantacao.authorities['ra-a'], 'pca-b-1': implantacao.authorities['ra-b']}
    for (issuer, serial), esperado in esperados.items():
        found = services.resolve(ras[issuer], implantacao.transport, pedido(issuer, serial), operador_ra)
        assert (found.subject_id, found.home_ltca) == esperado
    assert AuditLogEntry.objects.filter(outcome=AuditLogEntry.Outcome.OK).count() == len(esperados)


# --- pelo fio ---

@pytest.mark.django_db
def test_resolucao_pelo_fio_com_chave_de_operador(implantacao, cenario_roaming, operador_ra):
    chave = crypto.generate_keypair()
    OperatorKey.objects.create(user=operador_ra, public_key=chave.public)
    channel = Channel(implantacao.transport, 'ra-b', implantacao.trust.key_of('ra-b'), implantacao.clock, auth=chave)
    resposta = channel.call(MsgType.RESOLVE_REQ, pedido('pca-b-1', cenario_roaming['serial']), ResolutionResponse)
    assert (resposta.subject_id, resposta.home_ltca, resposta.partial) == ('veiculo-visitante', 'ltca-a', False)

    implantacao.transport.crash('ltca-a')
    parcial = channel.call(MsgType.RESOLVE_REQ, pedido('pca-b-1', cenario_roaming['serial']), ResolutionResponse)
    assert parcial.partial and parcial.subject_id is None
    assert parcial.home_ltca == 'ltca-a' and parcial.foreign_serial > 0


@pytest.mark.django_db
def test_chave_desconhecida_nao_resolve_pelo_fio(implantacao, cenario_resolucao):
    channel = Channel(
        implantacao.transport, 'ra-a', implantacao.trust.key_of('ra-a'), implantacao.clock,
        auth=crypto.generate_keypair(),
    )
    with pytest.raises(Unauthorized):
        channel.call(MsgType.RESOLVE_REQ, pedido('pca-a-1', cenario_resolucao['serial']), ResolutionResponse)


@pytest.mark.django_db
def test_operador_sem_permissao_pelo_fio(implantacao, cenario_resolucao):
    chave = crypto.generate_keypair()
    OperatorKey.objects.create(user=User.objects.create_user(username='sem_grupo'), public_key=chave.public)
    channel = Channel(implantacao.transport, 'ra-a', implantacao.trust.key_of('ra-a'), implantacao.clock, auth=chave)
    with pytest.raises(Unauthorized):
        channel.call(MsgType.RESOLVE_REQ, pedido('pca-a-1', cenario_resolucao['serial']), ResolutionResponse)
    assert AuditLogEntry.objects.get().outcome == AuditLogEntry.Outcome.DENIED


# --- comando ---

@pytest.mark.django_db
def test_comando_cria_grupo_e_operador(tmp_path):
    kp = crypto.generate_keypair()
    pem = tmp_path / 'op.pem'
    pem.write_bytes(crypto.dump_private_key(kp))
    call_command('create_operator_groups', operator='op1', key=str(pem))
    user = User.objects.get(username='op1')
    assert user.has_perm('ra.request_resolution')
    assert user.has_perm('ra.view_auditlogentry')
    assert bytes(user.ra_key.public_key) == kp.public
    # Rodar de novo não duplica nada.
    call_command('create_operator_groups', operator='op1')
    assert user.groups.count() == 1
