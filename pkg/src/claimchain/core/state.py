"""Private owner state (keyring, head, claim records), encrypted at rest.

File layout: ``b"CCST" || version || salt(16) || AES-GCM(json)`` where the
AES key is derived from a passphrase with scrypt.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from claimchain.core.chain import ClaimChain, ClaimRecord, KeyRing
from claimchain.crypto.group import Point
from claimchain.crypto.symmetric import KeyPair, aead_decrypt, aead_encrypt
from claimchain.store import ContentStore

STATE_MAGIC = b"CCST"
STATE_VERSION = 1
_SALT = 16


class StateError(ValueError):
    pass


def _derive(passphrase: str, salt: bytes) -> bytes:
    return hashlib.scrypt(passphrase.encode(), salt=salt, n=2**14, r=8, p=1, dklen=16)


def _kp(kp: KeyPair) -> str:
    return format(kp.sk, "064x")


def _record_to_json(r: ClaimRecord) -> dict:
    return {
        "label": r.label.hex(), "body": r.body.hex(), "r": format(r.r, "064x"),
        "h": r.h.to_bytes().hex(), "k": r.k.hex(), "t": r.t.hex(),
        "block_index": r.block_index, "nonce": r.nonce.hex(), "lookup_key": r.lookup_key.hex(),
    }


def _record_from_json(d: dict) -> ClaimRecord:
    return ClaimRecord(
        bytes.fromhex(d["label"]), bytes.fromhex(d["body"]), int(d["r"], 16),
        Point.from_bytes(bytes.fromhex(d["h"])), bytes.fromhex(d["k"]), bytes.fromhex(d["t"]),
        d["block_index"], bytes.fromhex(d["nonce"]), bytes.fromhex(d["lookup_key"]),
    )


def chain_to_json(chain: ClaimChain) -> dict:
    kr = chain.keyring
    return {
        "version": STATE_VERSION,
        "keys": {
            "sig": _kp(kr.sig), "vrf": _kp(kr.vrf), "dh": _kp(kr.dh),
            "prev_sig": None if kr.prev_sig_sk is None else format(kr.prev_sig_sk, "064x"),
        },
        "blocks": [h.hex() for h in chain.block_hashes],
        "records": [_record_to_json(r) for recs in chain.records.values() for r in recs.values()],
        "acls": {str(i): [[pk.hex(), label.hex()] for pk, label in sorted(acl)]
                 for i, acl in chain.acls.items()},
    }


def chain_from_json(d: dict, store: ContentStore) -> ClaimChain:
    keys = d["keys"]
    kr = KeyRing(
        KeyPair.from_secret(int(keys["sig"], 16)),
        KeyPair.from_secret(int(keys["vrf"], 16)),
        KeyPair.from_secret(int(keys["dh"], 16)),
        None if keys["prev_sig"] is None else int(keys["prev_sig"], 16),
    )
    chain = ClaimChain(kr, store)
    chain.block_hashes = [bytes.fromhex(h) for h in d["blocks"]]
    for i in range(len(chain.block_hashes)):
        chain.records[i] = {}
    for rd in d["records"]:
        rec = _record_from_json(rd)
        chain.records.setdefault(rec.block_index, {})[rec.label] = rec
    chain.acls = {int(i): frozenset((bytes.fromhex(pk), bytes.fromhex(lb)) for pk, lb in acl)
                  for i, acl in d.get("acls", {}).items()}
    return chain


def save_state(path: str | os.PathLike, chain: ClaimChain, passphrase: str) -> None:
    salt = os.urandom(_SALT)
    body = json.dumps(chain_to_json(chain), sort_keys=True).encode()
    blob = STATE_MAGIC + bytes([STATE_VERSION]) + salt + aead_encrypt(_derive(passphrase, salt), body)
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def load_state(path: str | os.PathLike, store: ContentStore, passphrase: str) -> ClaimChain:
    blob = Path(path).read_bytes()
    if blob[:4] != STATE_MAGIC or len(blob) < 5 + _SALT:
        raise StateError("not a ClaimChain state file")
    if blob[4] != STATE_VERSION:
        raise StateError(f"unsupported state version {blob[4]}")
    salt = blob[5:5 + _SALT]
    body = aead_decrypt(_derive(passphrase, salt), blob[5 + _SALT:])
    if body is None:
        raise StateError("wrong passphrase or corrupted state file")
    return chain_from_json(json.loads(body), store)
