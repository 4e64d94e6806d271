"""Cenários compartilhados pelos testes de todos os apps."""
import pytest
from django.contrib.auth.models import User

from core.clock import ManualClock
from core.credentials import Interval
from core.policy import DomainPolicy
from sim.deployment import Deployment
from sim.scenario import two_domain_topology
from vehicle.client import VehicleClient

# Múltiplo de Γ e de τ: os intervalos pedidos a partir daqui já caem na grade.
T0 = 1_800_000_000
GAMMA = 3600
TAU = 300

POLITICA_TESTE = DomainPolicy(ticket_interval_seconds=GAMMA, pseudonym_lifetime_seconds=TAU)


@pytest.fixture
def relogio():
    return ManualClock(T0)


@pytest.fixture
def implantacao(relogio):
    """Dois domínios (A e B) em processo, uma PCA por domínio, chaves derivadas de semente."""
    return Deployment(two_domain_topology(policy=POLITICA_TESTE), relogio, seed=7)


@pytest.fixture
def implantacao_replicada(relogio):
    """Como `implantacao`, mas com duas réplicas atrás do balanceador em cada PCA."""
    return Deployment(two_domain_topology(pca_replicas=2, policy=POLITICA_TESTE), relogio, seed=7)


def novo_veiculo(deployment, subject_id, domain="A", enroll=True):
    spec = deployment.topology.domain(domain)
    policies = {d.name: deployment.policy_of(d.name) for d in deployment.topology.domains}
    client = VehicleClient(
        subject_id, spec.ltca.id, deployment.transport, deployment.trust, deployment.clock,
        policy=deployment.policy_of(domain), policies=policies,
    )
    if enroll:
        now = deployment.clock.now()
        client.enroll(Interval(now - 60, now + 365 * 86400))
    return client


@pytest.fixture
def veiculo(implantacao):
    return novo_veiculo(implantacao, "veiculo-teste")


@pytest.fixture
def operador_ra(db):
    """Usuário do grupo de operadores da RA (mesmas permissões do comando create_operator_groups)."""
    from django.contrib.auth.models import Permission

    user = User.objects.create_user(username='operador_teste')
    perms = Permission.objects.filter(codename__in=['request_resolution', 'view_auditlogentry'])
    user.user_permissions.add(*perms)
    return User.objects.get(pk=user.pk)
