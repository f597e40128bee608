"""Regenerate vectors.json. Oracle fields come from tests/oracles.py; the
chain fields are regression values frozen from a seeded run."""

import json
import sys
from pathlib import Path

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE.parent))

import oracles  # noqa: E402
from claimchain.core.chain import Claim, ClaimChain, KeyRing  # noqa: E402
from claimchain.crypto import seeded  # noqa: E402

SEED = 7


def oracle_fields() -> dict:
    d = oracles.Drbg(SEED)
    keys = [d.scalar() for _ in range(3)]
    return {
        "hash_to_group": {m: oracles.compress(oracles.h_group(m.encode())).hex()
                          for m in ("", "alice", "claimchain/pedersen/g1", "claimchain/pedersen/g2")},
        "seeded_keyring_pks": [oracles.compress(oracles.mul(k)).hex() for k in keys],
    }


def seeded_chain():
    with seeded(SEED):
        owner = ClaimChain()
        reader = KeyRing.generate()
        owner.extend([Claim.make("bob", b"bob's key")], [(reader.dh.pk, b"bob")], public_data=b"pk")
        owner.keyring.rotate()
        owner.extend([Claim.make("bob", b"bob's new key")], [(reader.dh.pk, b"bob")], public_data=b"pk")
    return owner, reader


def regression_fields() -> dict:
    owner, _ = seeded_chain()
    return {
        "blocks": [b.encode().hex() for b in owner.blocks()],
        "head": owner.head.hex(),
    }


if __name__ == "__main__":
    out = {"seed": SEED, "oracle": oracle_fields(), "regression": regression_fields()}
    (HERE / "vectors.json").write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
