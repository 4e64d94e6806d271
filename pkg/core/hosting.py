"""
Hospedagem dos endpoints no binding HTTP.

As linhas de comando (`ltca`, `pca`, `ra`, `directory`) montam a autoridade,
registram o endpoint aqui e sobem o gunicorn com a aplicação WSGI do
projeto. A view `wire_endpoint` encontra o endpoint pelo CaId da URL.
"""
import logging
import threading
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.db import connections
from gunicorn.app.base import BaseApplication

from . import crypto
from .authority import Authority
from .credentials import TrustStore
from .encoding import decode_tagged
from .policy import default_policy, load_policy

logger = logging.getLogger(__name__)

_ENDPOINTS = {}
_lock = threading.Lock()


def register_endpoint(endpoint) -> None:
    with _lock:
        _ENDPOINTS[endpoint.ca_id] = endpoint


def unregister_endpoint(ca_id: str) -> None:
    with _lock:
        _ENDPOINTS.pop(ca_id, None)


def get_endpoint(ca_id: str):
    with _lock:
        return _ENDPOINTS.get(ca_id)


def use_state_file(path: str | Path) -> None:
    """Aponta o banco padrão para `path` e aplica as migrações."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    connections.close_all()
    connections['default'].settings_dict['NAME'] = str(path)
    call_command('migrate', interactive=False, verbosity=0)
    logger.info("estado persistente em %s", path)


def split_listen(listen: str) -> str:
    host, sep, port = listen.rpartition(':')
    if not sep or not port.isdigit():
        raise ValueError(f"--listen precisa ser host:porta, recebido {listen!r}")
    return f"{host or '0.0.0.0'}:{port}"


class WireApplication(BaseApplication):
    """
    Um único processo worker com threads: o cache de nonces e os endpoints
    vivem na memória desse processo.
    """

    def __init__(self, listen: str, threads: int = 8):
        self.options = {
            'bind': split_listen(listen),
            'workers': 1,
            'worker_class': 'gthread',
            'threads': threads,
            'preload_app': True,
        }
        super().__init__()

    def load_config(self):
        for key, value in self.options.items():
            self.cfg.set(key, value)

    def load(self):
        from django.core.wsgi import get_wsgi_application

        return get_wsgi_application()


def serve(listen: str, threads: int = 8) -> None:
    logger.info("servindo %s em %s", ", ".join(sorted(_ENDPOINTS)), listen)
    WireApplication(listen, threads=threads).run()


def load_authority(ca_id: str, role, *, trust_path, key_path=None, policy_path=None, **extra):
    """Monta uma `Authority` a partir dos arquivos gerados por `bootstrap_deployment`."""
    trust = decode_tagged(Path(trust_path).read_bytes(), TrustStore)
    anchor = trust.get(ca_id)
    if anchor is None or anchor.role != role:
        raise ValueError(f"{ca_id} não está no trust store com o papel {role.name}")
    key_path = Path(key_path) if key_path else Path(settings.VPKI_KEY_DIR) / f"{ca_id}.pem"
    keypair = crypto.load_private_key(key_path.read_bytes())
    if keypair.public != anchor.public_key:
        raise ValueError(f"a chave em {key_path} não é a de {ca_id} no trust store")
    policy = load_policy(policy_path) if policy_path else default_policy()
    return Authority(ca_id, role, keypair, trust, policy=policy, domain=anchor.domain, **extra)
