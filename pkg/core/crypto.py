"""
Primitivas criptográficas: ECDSA P-256, SHA-256 e aleatoriedade.

Chaves públicas trafegam como ponto não comprimido (65 bytes) e assinaturas
como r || s de largura fixa (64 bytes), nunca em DER.
"""
import hashlib
import secrets
import struct
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)

CURVE = ec.SECP256R1()
# ordem do grupo de P-256
CURVE_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551

PUBLIC_KEY_SIZE = 65
SIGNATURE_SIZE = 64
DIGEST_SIZE = 32
RND_SIZE = 32

PublicKey = bytes
Signature = bytes
Digest256 = bytes
Rnd256 = bytes


@dataclass(frozen=True)
class KeyPair:
    public: PublicKey
    private: ec.EllipticCurvePrivateKey = field(repr=False, compare=False)

    def sign(self, msg: bytes) -> Signature:
        return sign(self.private, msg)


def _public_bytes(private: ec.EllipticCurvePrivateKey) -> PublicKey:
    return private.public_key().public_bytes(
        serialization.Encoding.X962, serialization.PublicFormat.UncompressedPoint
    )


def generate_keypair(rng_seed: bytes | None = None) -> KeyPair:
    """
    Gera um par de chaves P-256.

    ATENÇÃO: `rng_seed` existe só para testes determinísticos. Uma chave
    derivada de semente conhecida não é segura em produção.
    """
    if rng_seed is None:
        private = ec.generate_private_key(CURVE)
    else:
        scalar = int.from_bytes(hashlib.sha256(b"vpki-test-seed" + rng_seed).digest(), "big")
        private = ec.derive_private_key(scalar % (CURVE_ORDER - 1) + 1, CURVE)
    return KeyPair(public=_public_bytes(private), private=private)


def sign(priv: ec.EllipticCurvePrivateKey, msg: bytes) -> Signature:
    der = priv.sign(msg, ec.ECDSA(hashes.SHA256()))
    r, s = decode_dss_signature(der)
    return r.to_bytes(32, "big") + s.to_bytes(32, "big")


def verify(pub: PublicKey, msg: bytes, sig: Signature) -> bool:
    """Nunca lança: qualquer entrada malformada é simplesmente `False`."""
    if not isinstance(sig, (bytes, bytearray)) or len(sig) != SIGNATURE_SIZE:
        return False
    if not isinstance(pub, (bytes, bytearray)) or len(pub) != PUBLIC_KEY_SIZE:
        return False
    try:
        key = ec.EllipticCurvePublicKey.from_encoded_point(CURVE, bytes(pub))
        der = encode_dss_signature(int.from_bytes(sig[:32], "big"), int.from_bytes(sig[32:], "big"))
        key.verify(der, bytes(msg), ec.ECDSA(hashes.SHA256()))
        return True
    except (InvalidSignature, ValueError, TypeError):
        return False


def sha256(data: bytes) -> Digest256:
    return hashlib.sha256(data).digest()


def hash_bind(ca_id: str, rnd: Rnd256) -> Digest256:
    """H(CA_id || Rnd): SHA-256 sobre a string codificada (u32 + UTF-8) seguida dos 32 bytes."""
    if not ca_id:
        raise ValueError("ca_id vazio")
    if len(rnd) != RND_SIZE:
        raise ValueError("Rnd256 precisa de 32 bytes")
    raw = ca_id.encode("utf-8")
    return sha256(struct.pack(">I", len(raw)) + raw + bytes(rnd))


def random_rnd() -> Rnd256:
    return secrets.token_bytes(RND_SIZE)


def random_nonce() -> int:
    return secrets.randbits(64)


def dump_private_key(kp: KeyPair) -> bytes:
    return kp.private.private_bytes(
        serialization.Encoding.PEM,
        serialization.PrivateFormat.PKCS8,
        serialization.NoEncryption(),
    )


def load_private_key(pem: bytes) -> KeyPair:
    private = serialization.load_pem_private_key(pem, password=None)
    if not isinstance(private, ec.EllipticCurvePrivateKey) or private.curve.name != CURVE.name:
        raise ValueError("a chave precisa ser ECDSA P-256")
    return KeyPair(public=_public_bytes(private), private=private)
