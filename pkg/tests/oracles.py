"""Independent reference implementations used as test oracles.

Plain affine arithmetic on secp256k1 and straight-line re-derivations of the
hash constructions. Slow, but shares no code with the package.
"""

import hashlib

P = 2**256 - 2**32 - 977
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
G = (0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
     0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8)


def add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    if a[0] == b[0] and (a[1] + b[1]) % P == 0:
        return None
    if a == b:
        lam = 3 * a[0] * a[0] * pow(2 * a[1], -1, P) % P
    else:
        lam = (b[1] - a[1]) * pow(b[0] - a[0], -1, P) % P
    x = (lam * lam - a[0] - b[0]) % P
    return x, (lam * (a[0] - x) - a[1]) % P


def mul(k, pt=G):
    k %= N
    acc = None
    while k:
        if k & 1:
            acc = add(acc, pt)
        pt = add(pt, pt)
        k >>= 1
    return acc


def compress(pt) -> bytes:
    if pt is None:
        return bytes(33)
    return bytes([2 + (pt[1] & 1)]) + pt[0].to_bytes(32, "big")


def decompress(data: bytes):
    x = int.from_bytes(data[1:], "big")
    y2 = (pow(x, 3, P) + 7) % P
    y = pow(y2, (P + 1) // 4, P)
    if y * y % P != y2:
        return None
    if (y & 1) != (data[0] & 1):
        y = P - y
    return x, y


def h_family(i: int, data: bytes) -> bytes:
    return hashlib.sha256(i.to_bytes(8, "little") + data).digest()


def h_scalar(data: bytes) -> int:
    return int.from_bytes(hashlib.sha256(b"claimchain/Hq" + data).digest(), "big") % N


def h_group(data: bytes):
    ctr = 0
    while True:
        d = hashlib.sha256(data + bytes([ctr])).digest()
        pt = decompress(b"\x02" + d)
        if pt is not None and int.from_bytes(d, "big") < P:
            return pt
        ctr += 1


def pack(*fields: bytes) -> bytes:
    return b"".join(len(f).to_bytes(4, "big") + f for f in fields)


def median_depths(n: int) -> list[int]:
    """Leaf depths (root = 0) of a median-split tree over ``n`` sorted keys."""
    if n == 1:
        return [0]
    mid = n // 2
    return [d + 1 for d in median_depths(mid)] + [d + 1 for d in median_depths(n - mid)]


class Drbg:
    """Seeded byte source: SHA-256(key || be64(ctr)), fresh blocks per request."""

    def __init__(self, seed: int):
        self.key = hashlib.sha256(b"claimchain/drbg" + seed.to_bytes(16, "big", signed=True)).digest()
        self.ctr = 0

    def take(self, n: int) -> bytes:
        out = b""
        while len(out) < n:
            out += hashlib.sha256(self.key + self.ctr.to_bytes(8, "big")).digest()
            self.ctr += 1
        return out[:n]

    def scalar(self) -> int:
        nbytes = (N.bit_length() + 7) // 8 + 8
        limit = (256 ** nbytes // N) * N
        while True:
            v = int.from_bytes(self.take(nbytes), "big")
            if v < limit and v % N:
                return v % N
