"""
CRLs das outras PCAs, buscadas pelo fio.

Um solicitante de OCSP pode se autenticar com pseudônimo de outra PCA; a
revogação dele só é conhecida pela CRL da PCA emissora.
"""
import logging
import threading

from cachetools import TTLCache

from core.channels import Channel
from core.credentials import signature_valid
from core.exceptions import ResponseInvalid, UnknownIssuer
from core.wire import MsgType

from .messages import CrlRequest, CrlResponse

logger = logging.getLogger(__name__)


class PeerCrls:
    """
    Cache das CRLs completas de outras PCAs. Uma entrada vale `max_age`
    segundos do relógio da autoridade; depois disso a CRL é buscada de novo.
    """

    def __init__(self, transport, authority, *, max_age: int = 60, maxsize: int = 256):
        self.transport = transport
        self.authority = authority
        self._cache = TTLCache(maxsize=maxsize, ttl=max_age, timer=authority.clock.now)
        self._lock = threading.Lock()

    def revoked(self, issuer: str) -> frozenset:
        with self._lock:
            entries = self._cache.get(issuer)
        if entries is None:
            entries = self._fetch(issuer)
            with self._lock:
                self._cache[issuer] = entries
        return entries

    def is_revoked(self, issuer: str, serial: int) -> bool:
        return serial in self.revoked(issuer)

    def _fetch(self, issuer: str) -> frozenset:
        key = self.authority.trust.key_of(issuer)
        if key is None:
            raise UnknownIssuer(f"{issuer} fora do trust store")
        channel = Channel(
            self.transport, issuer, key, self.authority.clock, skew=self.authority.policy.clock_skew_seconds
        )
        crl = channel.call(MsgType.CRL_REQ, CrlRequest(None), CrlResponse).crl
        if crl.issuer != issuer or crl.delta or not signature_valid(crl, key):
            raise ResponseInvalid(f"CRL de {issuer} sem assinatura válida")
        logger.info("%s buscou a CRL %d de %s (%d entradas)",
                    self.authority.ca_id, crl.sequence, issuer, len(crl.entries))
        return frozenset(crl.entries)
