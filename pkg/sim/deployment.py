"""
Implantação em processo: todas as autoridades de uma topologia ligadas a um
`LocalTransport`, compartilhando o banco configurado (cada tabela separa as
linhas pelo CaId da autoridade).
"""
import logging
from dataclasses import dataclass, field

from django.contrib.auth.models import User

from core.authority import Authority
from core.channels import Channel, LocalTransport
from core.credentials import Role
from core.exceptions import ServiceSpawnFailure
from core.policy import DomainPolicy
from core.topology import Topology, build_material
from core.wire import NonceCache
from directory.client import DirectoryClient
from directory.endpoints import DirectoryEndpoint
from directory.manifest import build_manifest
from directory.services import Directory
from ltca.endpoints import LtcaEndpoint
from ltca.snapshot import export_snapshot as export_ltca
from pca.balancer import ReplicaBalancer, replica_id
from pca.endpoints import PcaEndpoint
from pca.peers import PeerCrls
from pca.snapshot import export_snapshot as export_pca
from ra.endpoints import RaEndpoint

logger = logging.getLogger(__name__)

MONITOR_OPERATOR = 'sim-monitor'


@dataclass
class Deployment:
    topology: Topology
    clock: object
    seed: int | None = None
    transport: LocalTransport = field(default_factory=LocalTransport)

    def __post_init__(self):
        self.material = build_material(self.topology, seed=self.seed)
        self.trust = self.material.trust
        self.authorities: dict[str, Authority] = {}
        self.balancers: dict[str, ReplicaBalancer] = {}
        self.replicas: dict[str, list[str]] = {}
        self.endpoints: dict = {}
        try:
            self._spawn()
        except (ValueError, KeyError) as exc:
            raise ServiceSpawnFailure(str(exc)) from exc

    def policy_of(self, domain: str) -> DomainPolicy:
        if not domain:
            return DomainPolicy()
        return self.topology.domain(domain).policy or DomainPolicy()

    def _authority(self, ca_id, role, domain, **extra) -> Authority:
        return Authority(
            ca_id, role, self.material.keys[ca_id], self.trust,
            policy=self.policy_of(domain), domain=domain, clock=self.clock, **extra,
        )

    def _spawn(self) -> None:
        for spec, role, domain in self.topology.authorities():
            if role == Role.RCA:
                continue
            if role == Role.PCA:
                self._spawn_pca(spec.id, domain)
                continue
            authority = self._authority(spec.id, role, domain)
            self.authorities[spec.id] = authority
            if role == Role.LTCA:
                endpoint = LtcaEndpoint(authority)
            elif role == Role.RA:
                endpoint = RaEndpoint(authority, self.transport)
            else:
                manifest = build_manifest(self.topology, self.trust, authority.keypair, self.clock.now())
                endpoint = DirectoryEndpoint(authority, Directory(manifest, authority.public_key))
            self._bind(spec.id, endpoint)
        logger.info("implantação em processo com %d autoridades", len(self.authorities))

    def _spawn_pca(self, ca_id: str, domain: str) -> None:
        count = self.topology.domain(domain).pca_replicas
        if count == 1:
            authority = self._authority(ca_id, Role.PCA, domain)
            self.authorities[ca_id] = authority
            self._bind(ca_id, PcaEndpoint(authority, PeerCrls(self.transport, authority)))
            return
        # Réplicas: mesmo CaId e chave, seriais em classes de resíduo disjuntas.
        policy = self.policy_of(domain)
        shared = NonceCache(policy.nonce_retention_seconds, self.clock)
        ids = []
        for index in range(count):
            authority = self._authority(
                ca_id, Role.PCA, domain, serial_offset=index, serial_stride=count, nonce_cache=shared
            )
            rid = replica_id(ca_id, index)
            self._bind(rid, PcaEndpoint(authority, PeerCrls(self.transport, authority)))
            ids.append(rid)
            if index == 0:
                self.authorities[ca_id] = authority
        self.replicas[ca_id] = ids
        self.balancers[ca_id] = ReplicaBalancer(self.transport, ids)
        self._bind(ca_id, self.balancers[ca_id])

    def _bind(self, server_id: str, handler) -> None:
        self.endpoints[server_id] = handler
        self.transport.bind(server_id, handler)

    def ids(self, role: Role, domain: str | None = None) -> list[str]:
        return [
            spec.id for spec, r, d in self.topology.authorities()
            if r == role and (domain is None or d == domain)
        ]

    def directory_client(self) -> DirectoryClient:
        directory_id = self.topology.directory.id
        channel = Channel(self.transport, directory_id, self.trust.key_of(directory_id), self.clock)
        return DirectoryClient(channel)

    def operator(self) -> User:
        user, _created = User.objects.get_or_create(
            username=MONITOR_OPERATOR, defaults={'is_superuser': True, 'is_staff': True}
        )
        return user

    def snapshots(self) -> dict:
        snaps = {}
        for ca_id in self.ids(Role.LTCA):
            snaps[ca_id] = export_ltca(self.authorities[ca_id])
        for ca_id in self.ids(Role.PCA):
            snaps[ca_id] = export_pca(self.authorities[ca_id])
        return snaps
