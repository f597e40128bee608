"""Randomness source.

Production code draws from the OS. Simulations and benchmarks may run
inside :func:`seeded` so that every nonce, key and proof randomizer is
reproducible; never use that for real keys.
"""

from __future__ import annotations

import contextlib
import hashlib
import os
from contextvars import ContextVar


class _Drbg:
    """SHA-256 in counter mode over a seed."""

    def __init__(self, seed: int | bytes):
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "big", signed=True)
        self._key = hashlib.sha256(b"claimchain/drbg" + seed).digest()
        self._ctr = 0

    def __call__(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += hashlib.sha256(self._key + self._ctr.to_bytes(8, "big")).digest()
            self._ctr += 1
        return bytes(out[:n])


_source: ContextVar = ContextVar("claimchain_random_source", default=os.urandom)


def random_bytes(n: int) -> bytes:
    return _source.get()(n)


def randbelow(bound: int) -> int:
    """Uniform integer in ``[0, bound)`` by rejection sampling."""
    nbytes = (bound.bit_length() + 7) // 8 + 8
    limit = (256 ** nbytes // bound) * bound
    while True:
        v = int.from_bytes(random_bytes(nbytes), "big")
        if v < limit:
            return v % bound


@contextlib.contextmanager
def seeded(seed: int | bytes):
    token = _source.set(_Drbg(seed))
    try:
        yield
    finally:
        _source.reset(token)
