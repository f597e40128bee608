import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from claimchain.core.chain import Block
from claimchain.store import decode_fragment

ENV = {**os.environ, "CLAIMCHAIN_PASSPHRASE": "test passphrase"}


def cli(*args, check=True, env=ENV):
    proc = subprocess.run([sys.executable, "-m", "claimchain.cli", *map(str, args)],
                          capture_output=True, env=env)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}: {proc.stderr.decode()}")
    return proc


class User:
    def __init__(self, root: Path, name: str):
        self.dir = root / name
        self.root = root
        self.name = name
        cli("--state", self.dir, "keygen")

    def __call__(self, *args, **kw):
        return cli("--state", self.dir, *args, **kw)

    @property
    def identity(self):
        return json.loads((self.dir / "identity.json").read_text())

    @property
    def head(self):
        return self.identity["head"]

    def extend(self, claims=(), readers=()):
        c = self.root / f"{self.name}-claims.json"
        a = self.root / f"{self.name}-acl.json"
        c.write_text(json.dumps(list(claims)))
        a.write_text(json.dumps([{"reader": r.identity["pk_dh"], "label": c_["label"]}
                                 for r in readers for c_ in claims]))
        return self("extend", "--claims", c, "--acl", a).stdout.decode().strip()

    def export(self):
        out = self.root / f"{self.name}.frag"
        self("export", "--out", out)
        return out

    def blocks(self):
        """Own blocks in chain order, read back from an exported fragment."""
        items = decode_fragment(self.export().read_bytes())
        blocks = []
        for _, v in items:
            try:
                blocks.append(Block.decode(v))
            except ValueError:
                continue
        return sorted(blocks, key=lambda b: b.index)


def _ref(label, block):
    return {"label": label, "body_hex": block.encode().hex()}


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    b, fake, reader = User(root, "b"), User(root, "fake"), User(root, "reader")
    for u in (b, fake):
        for _ in range(4):
            u.extend()
    honest, liar = User(root, "honest"), User(root, "liar")
    real, forged = b.blocks(), fake.blocks()
    for i in range(4):
        honest.extend([_ref("b", real[i])], [reader])
        liar.extend([_ref("b", forged[i] if i in (1, 2) else real[i])], [reader])
    for u in (b, honest, liar):
        reader("import", u.export())
    return root, b, fake, reader, honest, liar


def test_keygen_refuses_overwrite_and_needs_passphrase(tmp_path):
    User(tmp_path, "x")
    assert cli("--state", tmp_path / "x", "keygen", check=False).returncode == 3
    env = {k: v for k, v in ENV.items() if k != "CLAIMCHAIN_PASSPHRASE"}
    proc = cli("--state", tmp_path / "y", "keygen", check=False, env=env)
    assert proc.returncode != 0 and "CLAIMCHAIN_PASSPHRASE" in proc.stderr.decode()


def test_cross_process_get(world):
    _, b, _, reader, honest, _ = world
    proc = reader("get", "--owner-head", honest.head, "--label", "b")
    assert proc.returncode == 0
    assert proc.stdout == b.blocks()[3].encode()
    assert reader("get", "--owner-head", honest.head, "--label", "zz", check=False).returncode == 1
    # the owner itself holds no capability for its own claim
    assert honest("get", "--owner-head", honest.head, "--label", "b", check=False).returncode == 1


def test_validate(world):
    root, b, _, reader, honest, _ = world
    proc = reader("--format", "jsonl", "validate", "--head", honest.head)
    assert json.loads(proc.stdout)["ok"] is True
    frag = b.export()
    data = bytearray(frag.read_bytes())
    data[-5] ^= 0xFF
    bad = root / "bad.frag"
    bad.write_bytes(bytes(data))
    proc = reader("validate", "--store", bad, "--head", b.head, check=False)
    assert proc.returncode in (1, 2)


def test_malformed_acl_rejected(world):
    root, b, *_ = world
    acl = root / "acl.json"
    acl.write_text(json.dumps([{"reader": "00" * 5, "label": "x"}]))
    claims = root / "claims.json"
    claims.write_text(json.dumps([{"label": "x", "body": "y"}]))
    proc = b("extend", "--claims", claims, "--acl", acl, check=False)
    assert proc.returncode == 3 and b"reader DH key" in proc.stderr


def _consistency(root, reader, owner, b_head, name, allowed_store):
    proof = root / f"{name}.proof"
    p = owner("prove-consistency", "--label", "b", "--from", 1, "--to", 2,
              "--allowed-head", b_head, "--allowed-from", 1, "--allowed-store", allowed_store,
              "--out", proof, check=False)
    return p, proof


def test_honest_consistency_accepts(world):
    root, b, _, reader, honest, _ = world
    b_head2 = b.blocks()[2].hash.hex()
    p, proof = _consistency(root, reader, honest, b_head2, "honest", b.export())
    assert p.returncode == 0
    check = reader("--format", "jsonl", "check-consistency", "--label", "b",
                   "--owner-head", honest.head, "--from", 1, "--to", 2,
                   "--allowed-head", b_head2, "--allowed-from", 1, "--proof", proof)
    assert json.loads(check.stdout)["ok"] is True

    tampered = root / "tampered.proof"
    data = bytearray(proof.read_bytes())
    data[len(data) // 2] ^= 1
    tampered.write_bytes(bytes(data))
    check = reader("check-consistency", "--label", "b", "--owner-head", honest.head,
                   "--from", 1, "--to", 2, "--allowed-head", b_head2, "--allowed-from", 1,
                   "--proof", tampered, check=False)
    assert check.returncode == 2


def test_equivocator_cannot_prove_or_forge(world):
    root, b, fake, reader, _, liar = world
    b_head2 = b.blocks()[2].hash.hex()
    p, _ = _consistency(root, reader, liar, b_head2, "liar", b.export())
    assert p.returncode == 2 and b"block 1" in p.stderr
    # a proof over the fake chain it really referenced does not pass against B
    p, proof = _consistency(root, reader, liar, fake.blocks()[2].hash.hex(), "forged", fake.export())
    assert p.returncode == 0
    check = reader("--format", "jsonl", "check-consistency", "--label", "b",
                   "--owner-head", liar.head, "--from", 1, "--to", 2,
                   "--allowed-head", b_head2, "--allowed-from", 1, "--proof", proof, check=False)
    out = json.loads(check.stdout)
    assert check.returncode == 2 and out["ok"] is False and out["block"] == 1


def test_sim_rerun_is_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        d = tmp_path / str(i)
        cli("--seed", 4, "sim", "--synth-users", 15, "--synth-events", 120, "--window", 40,
            "--mode", "both", "--out", d)
        outs.append([(d / m / f).read_bytes() for m in ("private", "public")
                     for f in ("metrics.jsonl", "summary.json")])
    assert outs[0] == outs[1]
    assert json.loads((tmp_path / "0" / "comparison.json").read_text())["format"]


def test_bench_jsonl():
    proc = cli("--format", "jsonl", "--seed", 1, "bench", "--suite", "claims", "-n", 5)
    rows = [json.loads(line) for line in proc.stdout.decode().splitlines()]
    assert {r["op"] for r in rows} == {"encode_claim", "decode_claim", "encode_capability",
                                       "decode_capability"}
