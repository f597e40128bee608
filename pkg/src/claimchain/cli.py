"""Command-line interface.

A state directory holds exactly one identity::

    state.bin     keys and claim records, encrypted under the passphrase
    chain.log     the owner's blocks and tree nodes (append-only)
    gossip.log    chain data imported from others (append-only)
    identity.json public keys and current head

The passphrase is read from ``CLAIMCHAIN_PASSPHRASE`` or prompted for on a
terminal; it is never taken from the command line.
"""

from __future__ import annotations

import contextlib
import json
import logging
import os
import sys
from pathlib import Path

import click
from filelock import FileLock

from claimchain import __version__
from claimchain.core.chain import (
    REJECTED,
    Block,
    Claim,
    ClaimChain,
    MissingBlock,
    MissingClaimForAcl,
    get_claim,
    load_block,
    validate_chain,
    walk_chain,
)
from claimchain.core.claims import ClaimTooLarge
from claimchain.core.consistency import (
    CannotProve,
    ConsistencyProof,
    check_consistency,
    prove_consistency,
)
from claimchain.core.state import StateError, load_state, save_state
from claimchain.crypto.group import Point
from claimchain.crypto.rand import seeded
from claimchain.encoding import DecodeError
from claimchain.store import (
    H,
    ContentStore,
    FileStore,
    IntegrityError,
    StoreView,
    decode_fragment,
)

STATE_FILE = "state.bin"
CHAIN_FILE = "chain.log"
GOSSIP_FILE = "gossip.log"
IDENTITY_FILE = "identity.json"
PASSPHRASE_ENV = "CLAIMCHAIN_PASSPHRASE"

log = logging.getLogger(__name__)

EXIT_OK, EXIT_NONE, EXIT_REJECTED, EXIT_ERROR = 0, 1, 2, 3


class Ctx:
    def __init__(self, state: str | None, fmt: str, seed: int | None, verbose: int):
        self.state = Path(state) if state else None
        self.fmt = fmt
        self.seed = seed
        self.verbose = verbose

    def emit(self, kind: str, human: str, **fields) -> None:
        if self.fmt == "jsonl":
            click.echo(json.dumps({"record": kind, **fields}, sort_keys=True))
        else:
            click.echo(human)

    def fail(self, message: str, code: int = EXIT_ERROR, **fields):
        if self.fmt == "jsonl":
            click.echo(json.dumps({"record": "error", "message": message, **fields}, sort_keys=True))
        else:
            click.echo(f"error: {message}", err=True)
        sys.exit(code)

    def state_dir(self) -> Path:
        if self.state is None:
            self.fail("no state directory; pass --state or set CLAIMCHAIN_STATE")
        return self.state

    def randomness(self):
        return seeded(self.seed) if self.seed is not None else contextlib.nullcontext()


pass_ctx = click.make_pass_decorator(Ctx)


def _passphrase(confirm: bool = False) -> str:
    value = os.environ.get(PASSPHRASE_ENV)
    if value is not None:
        return value
    if not sys.stdin.isatty():
        raise click.UsageError(f"set {PASSPHRASE_ENV} when not running on a terminal")
    return click.prompt("passphrase", hide_input=True, confirmation_prompt=confirm)


@contextlib.contextmanager
def _locked(ctx: Ctx):
    d = ctx.state_dir()
    d.mkdir(parents=True, exist_ok=True)
    with FileLock(str(d / ".lock"), timeout=30):
        yield d


def _open_owner(ctx: Ctx, d: Path, passphrase: str | None = None):
    if not (d / STATE_FILE).exists():
        ctx.fail(f"no identity in {d}; run keygen first")
    store = FileStore(d / CHAIN_FILE)
    try:
        chain = load_state(d / STATE_FILE, store, passphrase if passphrase is not None else _passphrase())
    except StateError as exc:
        store.close()
        ctx.fail(str(exc))
    return chain


def _write_identity(d: Path, chain: ClaimChain) -> None:
    kr = chain.keyring
    doc = {
        "pk_sig": kr.sig.pk.to_bytes().hex(),
        "pk_vrf": kr.vrf.pk.to_bytes().hex(),
        "pk_dh": kr.dh.pk.to_bytes().hex(),
        "head": chain.head.hex() if chain.head else None,
        "length": len(chain.block_hashes),
    }
    (d / IDENTITY_FILE).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _hex(ctx: Ctx, value: str, what: str, size: int | None = None) -> bytes:
    try:
        raw = bytes.fromhex(value)
    except ValueError:
        ctx.fail(f"{what} is not hex")
    if size is not None and len(raw) != size:
        ctx.fail(f"{what} must be {size} bytes")
    return raw


def _fragment_store(ctx: Ctx, path: str) -> ContentStore:
    store = ContentStore()
    try:
        store.import_fragment(Path(path).read_bytes())
    except (IntegrityError, DecodeError) as exc:
        ctx.fail(f"fragment rejected: {exc}", EXIT_REJECTED)
    return store


@click.group()
@click.version_option(__version__)
@click.option("--state", envvar="CLAIMCHAIN_STATE", type=click.Path(file_okay=False),
              help="State directory (default: $CLAIMCHAIN_STATE).")
@click.option("--format", "fmt", type=click.Choice(["human", "jsonl"]), default="human",
              show_default=True, help="Output format.")
@click.option("--seed", type=int, default=None,
              help="Seed all randomness except key generation (testing only).")
@click.option("-v", "--verbose", count=True)
@click.pass_context
def main(click_ctx, state, fmt, seed, verbose):
    """Manage a ClaimChain and run simulations and benchmarks."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    click_ctx.obj = Ctx(state, fmt, seed, verbose)


@main.command()
@click.option("--force", is_flag=True, help="Overwrite an existing identity.")
@pass_ctx
def keygen(ctx: Ctx, force: bool):
    """Create a fresh identity and an empty chain."""
    with _locked(ctx) as d:
        if (d / STATE_FILE).exists() and not force:
            ctx.fail(f"{d} already holds an identity; use --force to replace it")
        for name in (STATE_FILE, CHAIN_FILE, GOSSIP_FILE, IDENTITY_FILE):
            (d / name).unlink(missing_ok=True)
        chain = ClaimChain(store=ContentStore())
        save_state(d / STATE_FILE, chain, _passphrase(confirm=True))
        _write_identity(d, chain)
        ctx.emit("identity", f"pk_dh {chain.keyring.dh.pk.to_bytes().hex()}",
                 pk_dh=chain.keyring.dh.pk.to_bytes().hex(),
                 pk_vrf=chain.keyring.vrf.pk.to_bytes().hex(),
                 pk_sig=chain.keyring.sig.pk.to_bytes().hex())


def _read_claims(ctx: Ctx, path: str | None) -> list[Claim]:
    if path is None:
        return []
    try:
        items = json.loads(Path(path).read_text())
        claims = []
        for item in items:
            body = bytes.fromhex(item["body_hex"]) if "body_hex" in item else item["body"].encode()
            claims.append(Claim.make(item["label"], body))
        return claims
    except (ValueError, KeyError, TypeError) as exc:
        ctx.fail(f"bad claims file: {exc}")
    except ClaimTooLarge as exc:
        ctx.fail(str(exc))


def _read_acl(ctx: Ctx, path: str | None) -> list[tuple[Point, bytes]]:
    if path is None:
        return []
    try:
        items = json.loads(Path(path).read_text())
    except ValueError as exc:
        ctx.fail(f"bad ACL file: {exc}")
    acl = []
    for item in items:
        try:
            reader = Point.from_bytes(bytes.fromhex(item["reader"]))
        except (KeyError, ValueError, DecodeError):
            ctx.fail(f"unknown or malformed reader DH key in ACL entry {item!r}")
        if reader.is_identity:
            ctx.fail("reader DH key is the identity point")
        acl.append((reader, item["label"].encode()))
    return acl


@main.command()
@click.option("--claims", "claims_file", type=click.Path(exists=True, dir_okay=False),
              help='JSON list of {"label", "body" | "body_hex"}.')
@click.option("--acl", "acl_file", type=click.Path(exists=True, dir_okay=False),
              help='JSON list of {"reader": DH key hex, "label"}.')
@click.option("--public-data", "public_file", type=click.Path(exists=True, dir_okay=False),
              help="File whose bytes become the block's public data (e.g. an encryption key).")
@pass_ctx
def extend(ctx: Ctx, claims_file, acl_file, public_file):
    """Add a block; prints the new head hash."""
    claims = _read_claims(ctx, claims_file)
    acl = _read_acl(ctx, acl_file)
    public = Path(public_file).read_bytes() if public_file else b""
    with _locked(ctx) as d:
        passphrase = _passphrase()
        chain = _open_owner(ctx, d, passphrase)
        try:
            with ctx.randomness():
                head = chain.extend(claims, acl, public)
        except MissingClaimForAcl as exc:
            ctx.fail(f"ACL grants access to a label with no claim: {exc}")
        finally:
            chain.store.close()
        save_state(d / STATE_FILE, chain, passphrase)
        _write_identity(d, chain)
    ctx.emit("head", head.hex(), head=head.hex(), index=len(chain.block_hashes) - 1)


@main.command()
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Fragment file to write.")
@pass_ctx
def export(ctx: Ctx, out):
    """Export the whole chain (blocks and tree nodes) as a store fragment."""
    d = ctx.state_dir()
    ident = json.loads((d / IDENTITY_FILE).read_text()) if (d / IDENTITY_FILE).exists() else None
    if ident is None:
        ctx.fail(f"no identity in {d}")
    with FileStore(d / CHAIN_FILE) as store:
        data = store.export_all()
    Path(out).write_bytes(data)
    ctx.emit("export", f"{ident['head']} -> {out} ({len(data)} bytes)",
             head=ident["head"], bytes=len(data), path=str(out))


@main.command("import")
@click.argument("fragment", type=click.Path(exists=True, dir_okay=False))
@pass_ctx
def import_(ctx: Ctx, fragment):
    """Import a fragment received from someone else into the gossip store."""
    data = Path(fragment).read_bytes()
    with _locked(ctx) as d, FileStore(d / GOSSIP_FILE) as store:
        try:
            n = store.import_fragment(data)
        except (IntegrityError, DecodeError) as exc:
            ctx.fail(f"fragment rejected: {exc}", EXIT_REJECTED)
    ctx.emit("import", f"imported {n} new entries", new_entries=n)


def _lenient_fragment_store(ctx: Ctx, path: str) -> ContentStore:
    """Keep the intact entries of a fragment so validation can name the damage."""
    try:
        items = decode_fragment(Path(path).read_bytes())
    except DecodeError as exc:
        ctx.fail(f"fragment rejected: {exc}", EXIT_REJECTED)
    store = ContentStore()
    dropped = 0
    for h, v in items:
        if H(v) == h:
            store.put(v)
        else:
            dropped += 1
    if dropped:
        log.warning("dropped %d entries that fail the hash check", dropped)
    return store


def _lookup_store(ctx: Ctx, store_path: str | None, lenient: bool = False):
    """A fragment file, a state directory, or (default) the current state."""
    if store_path and Path(store_path).is_file():
        if lenient:
            return _lenient_fragment_store(ctx, store_path), []
        return _fragment_store(ctx, store_path), []
    d = Path(store_path) if store_path else ctx.state_dir()
    stores = [FileStore(p) for p in (d / CHAIN_FILE, d / GOSSIP_FILE) if p.exists()]
    return StoreView(*stores), stores


@main.command()
@click.option("--store", "store_path", type=click.Path(exists=True),
              help="Fragment file or state directory (default: --state).")
@click.option("--head", required=True, help="Head block hash (hex).")
@pass_ctx
def validate(ctx: Ctx, store_path, head):
    """Validate a full chain from genesis to HEAD."""
    h = _hex(ctx, head, "head", 32)
    store, opened = _lookup_store(ctx, store_path, lenient=True)
    try:
        if store.get(h) is None:
            ctx.fail(f"unknown or corrupt head {head}", EXIT_NONE)
        result = validate_chain(h, store)
    finally:
        for s in opened:
            s.close()
    if result:
        ctx.emit("validate", "accept", ok=True)
    else:
        ctx.emit("validate", f"reject: block {result.failed_index}: {result.reason}",
                 ok=False, block=result.failed_index, reason=result.reason)
        sys.exit(EXIT_REJECTED)


@main.command()
@click.option("--owner-head", required=True, help="Owner's head block hash (hex).")
@click.option("--label", required=True)
@click.option("--store", "store_path", type=click.Path(exists=True),
              help="Extra fragment holding the owner's chain.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the body here instead of stdout.")
@pass_ctx
def get(ctx: Ctx, owner_head, label, store_path, out):
    """Read a claim from someone's chain with this identity's capability."""
    h = _hex(ctx, owner_head, "owner head", 32)
    d = ctx.state_dir()
    chain = _open_owner(ctx, d)
    chain.store.close()
    extra = _fragment_store(ctx, store_path) if store_path and Path(store_path).is_file() else None
    stores = [FileStore(p) for p in (d / GOSSIP_FILE, d / CHAIN_FILE) if p.exists()]
    try:
        got = get_claim(chain.keyring.dh.sk, label.encode(), h, StoreView(extra, *stores))
    finally:
        for s in stores:
            s.close()
    if got is None:
        ctx.emit("claim", "none", status="none")
        sys.exit(EXIT_NONE)
    if got is REJECTED:
        ctx.emit("claim", "rejected", status="rejected")
        sys.exit(EXIT_REJECTED)
    if out:
        Path(out).write_bytes(got)
        ctx.emit("claim", f"{len(got)} bytes -> {out}", status="found", bytes=len(got), path=out)
    elif ctx.fmt == "jsonl":
        ctx.emit("claim", "", status="found", body_hex=got.hex())
    else:
        sys.stdout.buffer.write(got)


def _segment(ctx: Ctx, store, head: bytes, start: int, end: int | None) -> list[Block]:
    try:
        blocks = walk_chain(head, store, stop_index=start)
    except MissingBlock as exc:
        ctx.fail(f"missing block {exc}", EXIT_NONE)
    if end is not None:
        blocks = [b for b in blocks if b.index <= end]
    if not blocks or blocks[0].index != start:
        ctx.fail(f"chain does not reach index {start}")
    return blocks


@main.command("prove-consistency")
@click.option("--label", required=True)
@click.option("--from", "start", type=int, required=True, help="First own block index.")
@click.option("--to", "end", type=int, required=True, help="Last own block index.")
@click.option("--allowed-head", required=True, help="Newest allowed block of the referenced chain.")
@click.option("--allowed-from", type=int, required=True, help="Oldest allowed block index.")
@click.option("--allowed-store", type=click.Path(exists=True), help="Fragment or state dir holding the referenced chain.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@pass_ctx
def prove_consistency_cmd(ctx: Ctx, label, start, end, allowed_head, allowed_from, allowed_store, out):
    """Prove that own blocks FROM..TO only reference allowed blocks for LABEL."""
    d = ctx.state_dir()
    chain = _open_owner(ctx, d)
    try:
        allowed_src, opened = _lookup_store(ctx, allowed_store)
        store = StoreView(chain.store, allowed_src)
        own = [b for b in chain.blocks() if start <= b.index <= end]
        allowed = _segment(ctx, store, _hex(ctx, allowed_head, "allowed head", 32), allowed_from, None)
        records = [r for recs in chain.records.values() for r in recs.values()]
        with ctx.randomness():
            proof = prove_consistency(chain.keyring.vrf.sk, label.encode(), own, allowed, records, chain.store)
    except CannotProve as exc:
        ctx.fail(f"cannot prove: {exc}", EXIT_REJECTED, block=exc.block_index)
    finally:
        chain.store.close()
    data = proof.encode()
    Path(out).write_bytes(data)
    ctx.emit("proof", f"{len(proof.entries)} blocks, {len(data)} bytes -> {out}",
             blocks=len(proof.entries), bytes=len(data), path=out)


@main.command("check-consistency")
@click.option("--label", required=True)
@click.option("--owner-head", required=True)
@click.option("--from", "start", type=int, required=True)
@click.option("--to", "end", type=int, required=True)
@click.option("--allowed-head", required=True)
@click.option("--allowed-from", type=int, required=True)
@click.option("--store", "store_path", type=click.Path(exists=True),
              help="Fragment or state dir with both chains (default: --state).")
@click.option("--proof", "proof_file", required=True, type=click.Path(exists=True, dir_okay=False))
@pass_ctx
def check_consistency_cmd(ctx: Ctx, label, owner_head, start, end, allowed_head, allowed_from,
                          store_path, proof_file):
    """Check a consistency proof against the owner's and the referenced chain."""
    store, opened = _lookup_store(ctx, store_path)
    try:
        own = _segment(ctx, store, _hex(ctx, owner_head, "owner head", 32), start, end)
        allowed = _segment(ctx, store, _hex(ctx, allowed_head, "allowed head", 32), allowed_from, None)
        try:
            proof = ConsistencyProof.decode(Path(proof_file).read_bytes())
        except (DecodeError, ValueError) as exc:
            ctx.emit("consistency", f"reject: malformed proof: {exc}", ok=False, reason="malformed proof")
            sys.exit(EXIT_REJECTED)
        result = check_consistency(label.encode(), own, allowed, proof, store)
    finally:
        for s in opened:
            s.close()
    if result:
        ctx.emit("consistency", "accept", ok=True)
    else:
        idx, reason = result.failures[0]
        ctx.emit("consistency", f"reject: block {idx}: {reason}", ok=False, block=idx, reason=reason,
                 failures=len(result.failures))
        sys.exit(EXIT_REJECTED)


@main.command()
@click.option("--trace", "trace_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--synth-users", type=int, default=150, show_default=True)
@click.option("--synth-events", type=int, default=10000, show_default=True)
@click.option("--topology", type=click.Choice(["dense", "sparse"]), default="dense", show_default=True)
@click.option("--offset", type=int, default=None, help="Start index into the trace (default: whole trace).")
@click.option("--mode", type=click.Choice(["private", "public", "both"]), default="both", show_default=True)
@click.option("--window", type=int, default=1000, show_default=True)
@click.option("--rotation", type=int, default=200, show_default=True, help="Key rotation period (sent messages).")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@pass_ctx
def sim(ctx: Ctx, trace_file, synth_users, synth_events, topology, offset, mode, window, rotation, out):
    """Replay a trace (or a synthetic one) and write metrics per mode."""
    from claimchain.sim import SimConfig, load_trace, run, synth_trace, write_metrics

    seed = ctx.seed if ctx.seed is not None else 0
    if trace_file:
        trace = load_trace(trace_file)
    else:
        trace = synth_trace(synth_users, synth_events, topology, seed)
    if offset:
        trace = trace[offset:]
    modes = ("private", "public") if mode == "both" else (mode,)
    rates = {}
    for m in modes:
        cfg = SimConfig(mode=m, rotation_period=rotation, seed=seed, window=window)
        result = run(trace, cfg)
        write_metrics(result, Path(out) / m)
        s = result.summary()
        rates[m] = s["encrypted_rate"]
        ctx.emit("sim", f"{m}: {len(trace)} events, encrypted {s['encrypted_rate']:.3f}, "
                        f"final window {s['final_window_encrypted_rate']:.3f}",
                 mode=m, events=len(trace), encrypted_rate=s["encrypted_rate"],
                 final_window_encrypted_rate=s["final_window_encrypted_rate"])
    comparison = {"format": "claimchain-comparison/1", "encrypted_rate": rates}
    Path(out).mkdir(parents=True, exist_ok=True)
    (Path(out) / "comparison.json").write_text(json.dumps(comparison, indent=2, sort_keys=True) + "\n")


@main.command()
@click.option("--suite", type=click.Choice(["all", "claims", "tree", "block"]), default="all", show_default=True)
@click.option("-n", "n", type=int, default=1000, show_default=True, help="Claims to encode/decode.")
@pass_ctx
def bench(ctx: Ctx, suite, n):
    """Time claim operations, tree builds and block sizes."""
    from claimchain.bench import run_suite

    with ctx.randomness():
        rows = run_suite(suite, n)
    for row in rows:
        if row["suite"] == "claims":
            human = f"{row['op']:<20} {row['mean_ms']:8.3f} ms  (sd {row['sd_ms']:.3f}, n={row['n']})"
        elif row["suite"] == "tree":
            human = (f"tree n={row['n']:<5} build {row['build_ms']:8.1f} ms  path {row['mean_path_nodes']:.1f} nodes"
                     f"  proof <= {row['max_proof_bytes']} B")
        else:
            human = f"block {row['index']} with {row['claims']} claims: {row['block_bytes']} B"
        ctx.emit("bench", human, **row)


if __name__ == "__main__":
    main()
