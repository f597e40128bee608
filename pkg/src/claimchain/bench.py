"""Micro-benchmarks for claim operations, the block map and blocks."""

from __future__ import annotations

import statistics
import time

from claimchain.core.chain import Claim, ClaimChain
from claimchain.core.claims import (
    CLAIM_BODY_SIZE,
    dec_cap,
    dec_claim,
    enc_cap,
    enc_claim,
    pad_body,
)
from claimchain.crypto.rand import random_bytes
from claimchain.crypto.symmetric import KeyPair
from claimchain.merkle import build_tree, encode_path, get_path
from claimchain.store import ContentStore

SUITES = ("claims", "tree", "block")
TREE_SIZES = (100, 500, 1000, 2000, 5000)
LABEL_SIZE = 32


def _ms(samples: list[float]) -> dict:
    return {
        "mean_ms": statistics.fmean(samples) * 1e3,
        "sd_ms": (statistics.stdev(samples) if len(samples) > 1 else 0.0) * 1e3,
    }


def bench_claims(n: int = 1000) -> list[dict]:
    """Encode and decode ``n`` random claims and capabilities for random readers."""
    owner_vrf, owner_dh = KeyPair.generate(), KeyPair.generate()
    enc_c, dec_c, enc_k, dec_k = [], [], [], []
    for _ in range(n):
        label = random_bytes(LABEL_SIZE)
        body = random_bytes(CLAIM_BODY_SIZE)
        nonce = random_bytes(16)
        reader = KeyPair.generate()

        t0 = time.perf_counter()
        _, h, k, t, enc = enc_claim(owner_vrf.sk, label, body, nonce)
        t1 = time.perf_counter()
        out = dec_claim(owner_vrf.pk, label, h, k, t, enc, nonce)
        t2 = time.perf_counter()
        cap = enc_cap(owner_dh.sk, reader.pk, label, h, k, t, nonce)
        t3 = time.perf_counter()
        opened = dec_cap(reader.sk, owner_dh.pk, label, cap.ciphertext, nonce)
        t4 = time.perf_counter()
        if out != body or opened is None:
            raise AssertionError("round trip failed during benchmark")
        enc_c.append(t1 - t0)
        dec_c.append(t2 - t1)
        enc_k.append(t3 - t2)
        dec_k.append(t4 - t3)
    return [
        {"suite": "claims", "op": "encode_claim", "n": n, **_ms(enc_c)},
        {"suite": "claims", "op": "decode_claim", "n": n, **_ms(dec_c)},
        {"suite": "claims", "op": "encode_capability", "n": n, **_ms(enc_k)},
        {"suite": "claims", "op": "decode_capability", "n": n, **_ms(dec_k)},
    ]


def tree_stats(n: int) -> dict:
    """Build an ``n``-entry map of random claim-sized values and measure paths."""
    entries = {random_bytes(8): random_bytes(CLAIM_BODY_SIZE) for _ in range(n)}
    store = ContentStore()
    t0 = time.perf_counter()
    root = build_tree(entries, store)
    elapsed = time.perf_counter() - t0
    lengths, sizes = [], []
    for key in entries:
        path = get_path(root, key, store)
        lengths.append(len(path))
        sizes.append(len(encode_path(path)))
    return {
        "suite": "tree", "n": n, "build_ms": elapsed * 1e3,
        "mean_path_nodes": statistics.fmean(lengths), "max_path_nodes": max(lengths),
        "max_proof_bytes": max(sizes),
    }


def bench_tree(sizes=TREE_SIZES) -> list[dict]:
    return [tree_stats(n) for n in sizes]


def bench_block(n_blocks: int = 5, n_claims: int = 10) -> list[dict]:
    """Serialized block sizes while a chain grows with claims and capabilities."""
    chain = ClaimChain()
    reader = KeyPair.generate()
    rows = []
    for i in range(n_blocks):
        claims = [Claim(random_bytes(LABEL_SIZE), pad_body(random_bytes(300))) for _ in range(n_claims * i)]
        acl = [(reader.pk, c.label) for c in claims]
        chain.extend(claims, acl, b"pk")
        rows.append({"suite": "block", "index": i, "claims": len(claims),
                     "block_bytes": len(chain.block().encode())})
    return rows


def run_suite(suite: str = "all", n: int = 1000) -> list[dict]:
    if suite not in SUITES + ("all",):
        raise ValueError(f"unknown suite {suite!r}")
    rows = []
    if suite in ("claims", "all"):
        rows += bench_claims(n)
    if suite in ("tree", "all"):
        rows += bench_tree()
    if suite in ("block", "all"):
        rows += bench_block()
    return rows

