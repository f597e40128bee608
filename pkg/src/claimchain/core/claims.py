"""Encoding and decoding of claims and capabilities."""

from __future__ import annotations

from dataclasses import dataclass

from claimchain.crypto.group import (
    POINT_SIZE,
    Point,
    base_mul,
    hash_family,
    hash_to_group,
    hash_to_scalar,
    pedersen_commit,
    random_scalar,
)
from claimchain.crypto.proofs import (
    ClaimPublics,
    SpkTranscript,
    claim_spk_prove,
    claim_spk_verify,
)
from claimchain.crypto.symmetric import (
    KEY_SIZE,
    aead_decrypt,
    aead_encrypt,
    dh_shared_secret,
    new_symmetric_key,
)
from claimchain.encoding import DecodeError, pack, unpack
from claimchain.crypto.rand import random_bytes

LOOKUP_KEY_SIZE = 8
CLAIM_BODY_SIZE = 512
PROOF_KEY_SIZE = 32
NONCE_SIZE = 16
_LEN_PREFIX = 2


class ClaimTooLarge(ValueError):
    pass


def pad_body(body: bytes) -> bytes:
    """Length-prefix ``body`` and zero-pad it to :data:`CLAIM_BODY_SIZE`."""
    if len(body) > CLAIM_BODY_SIZE - _LEN_PREFIX:
        raise ClaimTooLarge(f"claim body of {len(body)} bytes exceeds the envelope")
    out = len(body).to_bytes(_LEN_PREFIX, "big") + body
    return out + bytes(CLAIM_BODY_SIZE - len(out))


def unpad_body(padded: bytes) -> bytes:
    if len(padded) != CLAIM_BODY_SIZE:
        raise DecodeError("claim body has the wrong envelope size")
    n = int.from_bytes(padded[:_LEN_PREFIX], "big")
    if n > CLAIM_BODY_SIZE - _LEN_PREFIX or any(padded[_LEN_PREFIX + n:]):
        raise DecodeError("bad claim padding")
    return padded[_LEN_PREFIX:_LEN_PREFIX + n]


def vrf_input(label: bytes, nonce: bytes) -> bytes:
    return pack(label, nonce)


def claim_lookup_key(h: Point) -> bytes:
    return hash_family(1, h.to_bytes())[:LOOKUP_KEY_SIZE]


@dataclass(frozen=True)
class EncodedClaim:
    lookup_key: bytes
    ciphertext: bytes
    commitment: Point

    def value(self) -> bytes:
        """Map value ``Enc(k, pi || m) || com``."""
        return self.ciphertext + self.commitment.to_bytes()

    @classmethod
    def from_value(cls, lookup_key: bytes, value: bytes) -> "EncodedClaim":
        if len(value) <= POINT_SIZE:
            raise DecodeError("encoded claim too short")
        return cls(lookup_key, value[:-POINT_SIZE], Point.from_bytes(value[-POINT_SIZE:]))


@dataclass(frozen=True)
class CapabilityEntry:
    lookup_key: bytes
    ciphertext: bytes


def enc_claim(sk_vrf: int, label: bytes, body: bytes, nonce: bytes):
    """Encode one claim.

    :param body: padded claim body (see :func:`pad_body`)
    :returns: ``(r, h, k, t, EncodedClaim)``
    """
    # the claim proof already covers VRF correctness; skip the standalone one
    h = hash_to_group(vrf_input(label, nonce)) * sk_vrf
    r = random_scalar()
    m_scalar = hash_to_scalar(body)
    com = pedersen_commit(r, m_scalar)
    t = random_bytes(PROOF_KEY_SIZE)
    pub = ClaimPublics(base_mul(sk_vrf), h, vrf_input(label, nonce), com, m_scalar)
    proof = claim_spk_prove(sk_vrf, r, pub, t)
    k = new_symmetric_key()
    ciphertext = aead_encrypt(k, pack(proof.to_bytes(), body))
    return r, h, k, t, EncodedClaim(claim_lookup_key(h), ciphertext, com)


def dec_claim(pk_vrf_owner: Point, label: bytes, h: Point, k: bytes, t: bytes,
              encoded: EncodedClaim, nonce: bytes) -> bytes | None:
    """Decrypt and verify a claim; ``None`` stands for rejection."""
    plaintext = aead_decrypt(k, encoded.ciphertext)
    if plaintext is None:
        return None
    try:
        proof_bytes, body = unpack(plaintext, 2)
        proof = SpkTranscript.from_bytes(proof_bytes)
    except DecodeError:
        return None
    pub = ClaimPublics(pk_vrf_owner, h, vrf_input(label, nonce), encoded.commitment,
                       hash_to_scalar(body))
    if not claim_spk_verify(pub, t, proof):
        return None
    return body


def _cap_keys(secret: bytes, label: bytes, nonce: bytes) -> tuple[bytes, bytes]:
    material = pack(secret, label, nonce)
    return (hash_family(3, material)[:LOOKUP_KEY_SIZE],
            hash_family(4, material)[:KEY_SIZE])


def capability_lookup_key(secret: bytes, label: bytes, nonce: bytes) -> bytes:
    return _cap_keys(secret, label, nonce)[0]


def enc_cap(sk_dh_owner: int, pk_dh_reader: Point, label: bytes, h: Point, k: bytes,
            t: bytes, nonce: bytes, secret: bytes | None = None) -> CapabilityEntry:
    """Encode the capability letting one reader find and open one claim.

    ``secret`` may carry a precomputed DH secret.
    """
    s = secret if secret is not None else dh_shared_secret(sk_dh_owner, pk_dh_reader)
    i_cap, k_cap = _cap_keys(s, label, nonce)
    return CapabilityEntry(i_cap, aead_encrypt(k_cap, h.to_bytes() + k + t))


def dec_cap(sk_dh_reader: int, pk_dh_owner: Point, label: bytes, ciphertext: bytes,
            nonce: bytes, secret: bytes | None = None):
    """Open a capability; returns ``(i, h, k, t)`` or ``None`` on authfail."""
    s = secret if secret is not None else dh_shared_secret(sk_dh_reader, pk_dh_owner)
    _, k_cap = _cap_keys(s, label, nonce)
    plaintext = aead_decrypt(k_cap, ciphertext)
    if plaintext is None or len(plaintext) != POINT_SIZE + KEY_SIZE + PROOF_KEY_SIZE:
        return None
    try:
        h = Point.from_bytes(plaintext[:POINT_SIZE])
    except DecodeError:
        return None
    k = plaintext[POINT_SIZE:POINT_SIZE + KEY_SIZE]
    t = plaintext[POINT_SIZE + KEY_SIZE:]
    return claim_lookup_key(h), h, k, t
