"""secp256k1 group arithmetic, hash family and Pedersen parameters.

Points wrap :class:`coincurve.PublicKey`; the identity element is
represented explicitly because libsecp256k1 cannot serialize it.
Scalars are plain Python integers reduced modulo :data:`ORDER`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

from coincurve import PublicKey

from claimchain.encoding import DecodeError
from claimchain.crypto.rand import randbelow

#: Field prime and group order of secp256k1.
FIELD_PRIME = 2**256 - 2**32 - 977
ORDER = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141

POINT_SIZE = 33
SCALAR_SIZE = 32
DIGEST_SIZE = 32

_IDENTITY_BYTES = bytes(POINT_SIZE)
_HQ_DOMAIN = b"claimchain/Hq"


class Point:
    """An element of the secp256k1 group (immutable)."""

    __slots__ = ("_key", "_enc")

    def __init__(self, key: PublicKey | None):
        self._key = key
        self._enc = key.format(compressed=True) if key is not None else _IDENTITY_BYTES

    @classmethod
    def identity(cls) -> "Point":
        return _IDENTITY

    @classmethod
    def from_bytes(cls, data: bytes) -> "Point":
        """Parse a 33-byte compressed encoding; 33 zero bytes is the identity."""
        if len(data) != POINT_SIZE:
            raise DecodeError("group element must be 33 bytes")
        if data == _IDENTITY_BYTES:
            return _IDENTITY
        if data[0] not in (2, 3):
            raise DecodeError("not a compressed point")
        try:
            return cls(PublicKey(bytes(data)))
        except ValueError as exc:
            raise DecodeError("point not on curve") from exc

    @property
    def is_identity(self) -> bool:
        return self._key is None

    def to_bytes(self) -> bytes:
        return self._enc

    def __add__(self, other: "Point") -> "Point":
        if self._key is None:
            return other
        if other._key is None:
            return self
        try:
            return Point(PublicKey.combine_keys([self._key, other._key]))
        except ValueError:
            # libsecp256k1 refuses to produce the point at infinity
            return _IDENTITY

    def __neg__(self) -> "Point":
        if self._key is None:
            return self
        enc = self._enc
        return Point(PublicKey(bytes([enc[0] ^ 1]) + enc[1:]))

    def __sub__(self, other: "Point") -> "Point":
        return self + (-other)

    def __mul__(self, scalar: int) -> "Point":
        k = scalar % ORDER
        if k == 0 or self._key is None:
            return _IDENTITY
        return Point(self._key.multiply(k.to_bytes(SCALAR_SIZE, "big")))

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Point) and self._enc == other._enc

    def __hash__(self) -> int:
        return hash(self._enc)

    def __repr__(self) -> str:
        return f"Point({self._enc.hex()[:16]}...)"


_IDENTITY = Point(None)


def base_mul(scalar: int) -> Point:
    """Fixed-base multiplication ``g^scalar`` using the precomputed table."""
    k = scalar % ORDER
    if k == 0:
        return _IDENTITY
    return Point(PublicKey.from_secret(k.to_bytes(SCALAR_SIZE, "big")))


def random_scalar() -> int:
    """Uniform non-zero element of Z_q."""
    while True:
        k = randbelow(ORDER)
        if k:
            return k


def scalar_to_bytes(k: int) -> bytes:
    return (k % ORDER).to_bytes(SCALAR_SIZE, "big")


def scalar_from_bytes(data: bytes) -> int:
    if len(data) != SCALAR_SIZE:
        raise DecodeError("scalar must be 32 bytes")
    k = int.from_bytes(data, "big")
    if k >= ORDER:
        raise DecodeError("scalar not reduced")
    return k


def hash_family(index: int, data: bytes) -> bytes:
    """``H_index(data) = SHA-256(le64(index) || data)``."""
    if index not in (1, 2, 3, 4):
        raise ValueError("hash family index must be in 1..4")
    return hashlib.sha256(index.to_bytes(8, "little") + data).digest()


def hash_to_scalar(data: bytes) -> int:
    return int.from_bytes(hashlib.sha256(_HQ_DOMAIN + data).digest(), "big") % ORDER


def hash_to_group(data: bytes) -> Point:
    """Try-and-increment: the first counter byte whose digest is a valid x
    coordinate gives the point with even y."""
    data = bytes(data)
    for ctr in range(256):
        x = hashlib.sha256(data + bytes([ctr])).digest()
        try:
            return Point(PublicKey(b"\x02" + x))
        except ValueError:
            continue
    raise RuntimeError("hash_to_group exhausted its counter")


@dataclass(frozen=True)
class GroupParams:
    g: Point
    g1: Point
    g2: Point
    q: int = ORDER


@lru_cache(maxsize=1)
def params() -> GroupParams:
    return GroupParams(
        g=base_mul(1),
        g1=hash_to_group(b"claimchain/pedersen/g1"),
        g2=hash_to_group(b"claimchain/pedersen/g2"),
    )


def pedersen_commit(r: int, m: int) -> Point:
    """``Com(r, m) = g1^r * g2^m``."""
    p = params()
    return p.g1 * r + p.g2 * m
