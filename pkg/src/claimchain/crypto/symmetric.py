"""AEAD, signatures and Diffie-Hellman on secp256k1."""

from __future__ import annotations

from dataclasses import dataclass

from coincurve import PrivateKey, PublicKey
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from claimchain.crypto.group import Point, base_mul, random_scalar, scalar_to_bytes
from claimchain.crypto.rand import random_bytes

KEY_SIZE = 16
NONCE_SIZE = 12
TAG_SIZE = 16
#: Bytes added by :func:`aead_encrypt` on top of the plaintext length.
AEAD_OVERHEAD = NONCE_SIZE + TAG_SIZE
SIGNATURE_SIZE = 65


def new_symmetric_key() -> bytes:
    return random_bytes(KEY_SIZE)


def aead_encrypt(key: bytes, plaintext: bytes, aad: bytes = b"") -> bytes:
    """AES-128-GCM; output is ``nonce || ciphertext || tag``."""
    nonce = random_bytes(NONCE_SIZE)
    return nonce + AESGCM(key).encrypt(nonce, plaintext, aad or None)


def aead_decrypt(key: bytes, ciphertext: bytes, aad: bytes = b"") -> bytes | None:
    """Inverse of :func:`aead_encrypt`; ``None`` signals an authentication failure."""
    if len(ciphertext) < AEAD_OVERHEAD or len(key) != KEY_SIZE:
        return None
    nonce, body = ciphertext[:NONCE_SIZE], ciphertext[NONCE_SIZE:]
    try:
        return AESGCM(key).decrypt(nonce, body, aad or None)
    except InvalidTag:
        return None


@dataclass(frozen=True)
class KeyPair:
    sk: int
    pk: Point

    @classmethod
    def generate(cls) -> "KeyPair":
        sk = random_scalar()
        return cls(sk, base_mul(sk))

    @classmethod
    def from_secret(cls, sk: int) -> "KeyPair":
        return cls(sk, base_mul(sk))


def sign(sk: int, msg: bytes) -> bytes:
    """Deterministic ECDSA over SHA-256, 65-byte recoverable encoding."""
    return PrivateKey(scalar_to_bytes(sk)).sign_recoverable(msg)


def verify(pk: Point, signature: bytes, msg: bytes) -> bool:
    if len(signature) != SIGNATURE_SIZE or pk.is_identity:
        return False
    try:
        recovered = PublicKey.from_signature_and_message(bytes(signature), msg)
    except (ValueError, TypeError):
        return False
    return recovered.format(compressed=True) == pk.to_bytes()


def dh_shared_secret(sk: int, pk_other: Point) -> bytes:
    """Compressed encoding of ``pk_other^sk``."""
    return (pk_other * sk).to_bytes()
