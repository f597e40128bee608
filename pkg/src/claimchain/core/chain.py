"""Blocks, chain extension, validation, claim retrieval and view resolution."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from claimchain.core.claims import (
    CLAIM_BODY_SIZE,
    NONCE_SIZE,
    EncodedClaim,
    capability_lookup_key,
    claim_lookup_key,
    dec_cap,
    dec_claim,
    enc_cap,
    enc_claim,
    pad_body,
    unpad_body,
)
from claimchain.crypto.group import Point, base_mul
from claimchain.crypto.rand import random_bytes
from claimchain.crypto.symmetric import (
    SIGNATURE_SIZE,
    KeyPair,
    dh_shared_secret,
    sign,
    verify,
)
from claimchain.encoding import DecodeError, pack, pack_int, unpack, unpack_int
from claimchain.merkle import MissingNode, build_tree, get_path, path_hashes, query_tree
from claimchain.store import H, ContentStore

BLOCK_VERSION = 1
GENESIS_PTR = bytes(32)


class KeyMismatch(ValueError):
    """The previous signing key does not match the previous block."""


class MissingClaimForAcl(ValueError):
    pass


class MissingBlock(LookupError):
    def __init__(self, block_hash: str, index: int | None = None):
        where = f" at index {index}" if index is not None else ""
        super().__init__(f"{block_hash}{where}")
        self.index = index


class _Rejected:
    def __repr__(self) -> str:
        return "REJECTED"

    def __bool__(self) -> bool:
        return False


#: Returned by :func:`get_claim` when verification fails (as opposed to
#: ``None`` when a lookup misses).
REJECTED = _Rejected()


@dataclass(frozen=True)
class BlockPayload:
    index: int
    nonce: bytes
    pk_sig: Point
    pk_vrf: Point
    pk_dh: Point
    public_data: bytes
    map_root: bytes

    def encode(self) -> bytes:
        return pack(
            bytes([BLOCK_VERSION]),
            pack_int(self.index),
            self.nonce,
            self.pk_sig.to_bytes(),
            self.pk_vrf.to_bytes(),
            self.pk_dh.to_bytes(),
            self.public_data,
            self.map_root,
        )

    @classmethod
    def decode(cls, data: bytes) -> "BlockPayload":
        version, index, nonce, pk_sig, pk_vrf, pk_dh, public_data, root = unpack(data, 8)
        if version != bytes([BLOCK_VERSION]):
            raise DecodeError("unsupported block version")
        if len(nonce) != NONCE_SIZE or len(root) != 32:
            raise DecodeError("malformed payload")
        return cls(
            unpack_int(index),
            nonce,
            Point.from_bytes(pk_sig),
            Point.from_bytes(pk_vrf),
            Point.from_bytes(pk_dh),
            public_data,
            root,
        )


@dataclass(frozen=True)
class Block:
    payload: BlockPayload
    ptr: bytes | None
    sigma: bytes

    @property
    def index(self) -> int:
        return self.payload.index

    def signed_message(self) -> bytes:
        return pack(self.payload.encode(), self.ptr or GENESIS_PTR)

    @cached_property
    def encoded(self) -> bytes:
        return pack(self.payload.encode(), self.ptr or GENESIS_PTR, self.sigma)

    def encode(self) -> bytes:
        return self.encoded

    @cached_property
    def hash(self) -> bytes:
        return H(self.encoded)

    @classmethod
    def decode(cls, data: bytes) -> "Block":
        payload, ptr, sigma = unpack(data, 3)
        if len(ptr) != 32 or len(sigma) != SIGNATURE_SIZE:
            raise DecodeError("malformed block")
        p = BlockPayload.decode(payload)
        if (p.index == 0) != (ptr == GENESIS_PTR):
            raise DecodeError("only the genesis block has a null pointer")
        return cls(p, None if ptr == GENESIS_PTR else ptr, sigma)


@dataclass
class KeyRing:
    sig: KeyPair
    vrf: KeyPair
    dh: KeyPair
    #: signing key whose public half sits in the previous block
    prev_sig_sk: int | None = None

    @classmethod
    def generate(cls) -> "KeyRing":
        return cls(KeyPair.generate(), KeyPair.generate(), KeyPair.generate())

    def rotate(self, sig: bool = True, vrf: bool = False, dh: bool = False) -> None:
        if sig:
            self.sig = KeyPair.generate()
        if vrf:
            self.vrf = KeyPair.generate()
        if dh:
            self.dh = KeyPair.generate()


@dataclass(frozen=True)
class Claim:
    label: bytes
    body: bytes

    def __post_init__(self):
        if len(self.body) != CLAIM_BODY_SIZE:
            raise ValueError("claim body must be padded; use Claim.make")

    @classmethod
    def make(cls, label: bytes | str, body: bytes) -> "Claim":
        if isinstance(label, str):
            label = label.encode()
        return cls(label, pad_body(body))


@dataclass(frozen=True)
class ClaimRecord:
    """Owner-side secrets for one claim in one block."""

    label: bytes
    body: bytes
    r: int
    h: Point
    k: bytes
    t: bytes
    block_index: int
    nonce: bytes
    lookup_key: bytes


AccessControlSet = Iterable[tuple[Point, bytes]]


def extend_chain(public_data: bytes, claims: Sequence[Claim], acm: AccessControlSet,
                 keyring: KeyRing, prev_ptr: bytes | None, store: ContentStore,
                 records: list | None = None) -> bytes:
    """Build, sign and store the next block; return its hash.

    ``records`` (if given) receives one :class:`ClaimRecord` per claim.
    On success ``keyring.prev_sig_sk`` is advanced to the current signing key.
    """
    if prev_ptr is None:
        index = 0
        signer = keyring.sig.sk
    else:
        raw = store.get(prev_ptr)
        if raw is None:
            raise MissingBlock(prev_ptr.hex())
        prev = Block.decode(raw)
        if keyring.prev_sig_sk is None or base_mul(keyring.prev_sig_sk) != prev.payload.pk_sig:
            raise KeyMismatch("previous signing key does not match the previous block")
        index = prev.index + 1
        signer = keyring.prev_sig_sk

    nonce = random_bytes(NONCE_SIZE)
    entries: list[tuple[bytes, bytes]] = []
    secrets_by_label = {}
    new_records = []
    for claim in claims:
        r, h, k, t, enc = enc_claim(keyring.vrf.sk, claim.label, claim.body, nonce)
        entries.append((enc.lookup_key, enc.value()))
        secrets_by_label[claim.label] = (h, k, t)
        new_records.append(ClaimRecord(claim.label, claim.body, r, h, k, t, index, nonce,
                                       enc.lookup_key))

    for reader_pk, label in acm:
        if label not in secrets_by_label:
            raise MissingClaimForAcl(label)
        h, k, t = secrets_by_label[label]
        cap = enc_cap(keyring.dh.sk, reader_pk, label, h, k, t, nonce)
        entries.append((cap.lookup_key, cap.ciphertext))

    root = build_tree(entries, store)
    payload = BlockPayload(index, nonce, keyring.sig.pk, keyring.vrf.pk, keyring.dh.pk,
                           public_data, root)
    unsigned = Block(payload, prev_ptr, bytes(SIGNATURE_SIZE))
    block = Block(payload, prev_ptr, sign(signer, unsigned.signed_message()))
    head = store.put(block.encode())
    keyring.prev_sig_sk = keyring.sig.sk
    if records is not None:
        records.extend(new_records)
    return head


@dataclass
class ValidationResult:
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def failed_index(self) -> int | None:
        return self.failures[0][0] if self.failures else None

    @property
    def reason(self) -> str:
        return self.failures[0][1] if self.failures else ""

    def __bool__(self) -> bool:
        return self.ok


def _as_block(b) -> Block:
    return b if isinstance(b, Block) else Block.decode(b)


def validate_blocks(blocks: Sequence[Block | bytes]) -> ValidationResult:
    """Check that ``blocks[1:]`` correctly extend the trusted ``blocks[0]``.

    Every failing block is listed; the first entry is the earliest failure.
    """
    result = ValidationResult()
    decoded: list[Block | None] = []
    for i, b in enumerate(blocks):
        try:
            decoded.append(_as_block(b))
        except (DecodeError, ValueError) as exc:
            decoded.append(None)
            result.failures.append((i, f"malformed block: {exc}"))
    for i in range(1, len(decoded)):
        prev, cur = decoded[i - 1], decoded[i]
        if prev is None or cur is None:
            if cur is not None:
                result.failures.append((i, "predecessor unusable"))
            continue
        if not verify(prev.payload.pk_sig, cur.sigma, cur.signed_message()):
            result.failures.append((i, "bad signature"))
        if cur.ptr != prev.hash:
            result.failures.append((i, "pointer mismatch"))
        if cur.index != prev.index + 1:
            result.failures.append((i, "index not consecutive"))
    result.failures.sort(key=lambda f: f[0])
    return result


def verify_genesis(block: Block) -> bool:
    return (block.index == 0 and block.ptr is None
            and verify(block.payload.pk_sig, block.sigma, block.signed_message()))


def load_block(store: ContentStore, h: bytes) -> Block | None:
    raw = store.get(h)
    if raw is None:
        return None
    try:
        return Block.decode(raw)
    except (DecodeError, ValueError):
        return None


def walk_chain(head: bytes, store: ContentStore, stop_index: int = 0) -> list[Block]:
    """Blocks from ``stop_index`` up to ``head`` in chain order.

    :raises MissingBlock: if a block on the way is absent or malformed.
    """
    out = []
    h = head
    while True:
        b = load_block(store, h)
        if b is None:
            raise MissingBlock(h.hex(), out[-1].index - 1 if out else None)
        out.append(b)
        if b.index <= stop_index or b.ptr is None:
            break
        h = b.ptr
    out.reverse()
    return out


def validate_chain(head: bytes, store: ContentStore) -> ValidationResult:
    """Validate the full chain ending at ``head``, genesis self-signature included."""
    try:
        blocks = walk_chain(head, store)
    except MissingBlock as exc:
        return ValidationResult([(exc.index if exc.index is not None else -1,
                                  f"missing or corrupt block {exc}")])
    result = validate_blocks(blocks)
    if not verify_genesis(blocks[0]):
        result.failures.insert(0, (0, "genesis not self-signed"))
    return result


def get_claim(sk_dh_reader: int, label: bytes, head_ptr: bytes, store: ContentStore,
              secret: bytes | None = None):
    """Read the claim for ``label`` from the block at ``head_ptr``.

    Returns the unpadded body, ``None`` if any lookup fails, or
    :data:`REJECTED` if something was found but did not verify.
    """
    raw = store.get(head_ptr)
    if raw is None:
        return None
    try:
        block = Block.decode(raw)
    except (DecodeError, ValueError):
        return REJECTED
    p = block.payload
    s = secret if secret is not None else dh_shared_secret(sk_dh_reader, p.pk_dh)
    i_cap = capability_lookup_key(s, label, p.nonce)
    try:
        cap = query_tree(p.map_root, i_cap, store)
        if cap is None:
            return None
        opened = dec_cap(sk_dh_reader, p.pk_dh, label, cap, p.nonce, secret=s)
        if opened is None:
            return REJECTED
        i, h, k, t = opened
        value = query_tree(p.map_root, i, store)
    except MissingNode:
        return None
    if value is None:
        return None
    try:
        encoded = EncodedClaim.from_value(i, value)
    except DecodeError:
        return REJECTED
    body = dec_claim(p.pk_vrf, label, h, k, t, encoded, p.nonce)
    if body is None:
        return REJECTED
    try:
        return unpad_body(body)
    except DecodeError:
        return REJECTED


# --- view resolution ---------------------------------------------------------

@dataclass(frozen=True)
class ConflictReport:
    kind: str  # "fork" or "distinct-chains"
    blocks: tuple[Block, ...]


@dataclass(frozen=True)
class Resolution:
    chosen: Block | None
    diversity: int
    conflict: ConflictReport | None = None
    #: evidence included older blocks of the chosen chain
    outdated: bool = False
    #: evidence blocks whose ancestry could not be checked against the store
    unverified: int = 0


def _ancestor_at(block: Block, index: int, store: ContentStore) -> Block | None:
    cur = block
    while cur.index > index:
        if cur.ptr is None:
            return None
        cur = load_block(store, cur.ptr)
        if cur is None:
            return None
    return cur


def resolve_latest(evidence: Iterable[Block], store: ContentStore | None = None) -> Resolution:
    """Pick the most recent block among the views of one user's chain.

    ``diversity`` counts evidence items (one per source). Two blocks at the
    same index, or a lower block that is not an ancestor of the highest,
    yield a conflict report and no choice. Ancestry that cannot be walked
    because the store lacks intermediate blocks is counted as unverified.
    """
    items = list(evidence)
    diversity = len(items)
    unique = {b.hash: b for b in items}
    if not unique:
        return Resolution(None, 0)
    ordered = sorted(unique.values(), key=lambda b: b.index, reverse=True)

    by_index: dict[int, list[Block]] = {}
    for b in ordered:
        by_index.setdefault(b.index, []).append(b)
    for same in by_index.values():
        if len(same) > 1:
            kind = "fork" if len({b.ptr for b in same}) == 1 else "distinct-chains"
            return Resolution(None, diversity, ConflictReport(kind, tuple(same)))

    top = ordered[0]
    unverified = 0
    local = store if store is not None else ContentStore()
    for b in ordered[1:]:
        anc = _ancestor_at(top, b.index, local)
        if anc is None:
            unverified += 1
        elif anc.hash != b.hash:
            kind = "fork" if anc.ptr == b.ptr else "distinct-chains"
            return Resolution(None, diversity, ConflictReport(kind, (anc, b)))
    return Resolution(top, diversity, None, outdated=len(ordered) > 1, unverified=unverified)


# --- owner-side convenience ------------------------------------------------

class ClaimChain:
    """A chain owner's view: keys, store, head and per-block claim records."""

    def __init__(self, keyring: KeyRing | None = None, store: ContentStore | None = None):
        self.keyring = keyring or KeyRing.generate()
        self.store = store if store is not None else ContentStore()
        self.block_hashes: list[bytes] = []
        self.records: dict[int, dict[bytes, ClaimRecord]] = {}
        self.acls: dict[int, frozenset[tuple[bytes, bytes]]] = {}

    @property
    def head(self) -> bytes | None:
        return self.block_hashes[-1] if self.block_hashes else None

    def extend(self, claims: Sequence[Claim] = (), acm: AccessControlSet = (),
               public_data: bytes = b"") -> bytes:
        acm = list(acm)
        recs: list[ClaimRecord] = []
        head = extend_chain(public_data, claims, acm, self.keyring, self.head, self.store, recs)
        index = len(self.block_hashes)
        self.block_hashes.append(head)
        self.records[index] = {r.label: r for r in recs}
        self.acls[index] = frozenset((pk.to_bytes(), label) for pk, label in acm)
        return head

    def block(self, index: int = -1) -> Block:
        return Block.decode(self.store.get(self.block_hashes[index]))

    def blocks(self) -> list[Block]:
        return [Block.decode(self.store.get(h)) for h in self.block_hashes]

    def relevant_hashes(self, reader_pk: Point, labels: Iterable[bytes], index: int = -1) -> list[bytes]:
        """Store hashes (nodes and values) that let ``reader_pk`` read ``labels``
        in block ``index``: the resolution paths of the capability and the claim."""
        block = self.block(index)
        idx = block.index
        if block.payload.pk_dh != self.keyring.dh.pk:
            raise KeyMismatch("DH key changed since this block was built")
        s = dh_shared_secret(self.keyring.dh.sk, reader_pk)
        out: list[bytes] = []
        for label in labels:
            rec = self.records.get(idx, {}).get(label)
            if rec is None:
                continue
            for key in (capability_lookup_key(s, label, block.payload.nonce), rec.lookup_key):
                path = get_path(block.payload.map_root, key, self.store)
                out.extend(path_hashes(path))
                if path and path[-1].key == key:
                    out.append(path[-1].value_hash)
        return out
