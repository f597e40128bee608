"""Proofs that a chain's hidden cross-references stay on one referenced chain.

For every intermediate block the owner reveals the VRF value for the label
(with its correctness proof) and proves in zero knowledge that the claim's
commitment opens to the hash of one of the allowed blocks. The verifier
locates the claim with a resolution path shipped inside the proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from claimchain.core.chain import Block, ClaimRecord, validate_blocks
from claimchain.core.claims import (
    EncodedClaim,
    claim_lookup_key,
    pad_body,
    vrf_input,
)
from claimchain.crypto.group import base_mul, hash_to_scalar, pedersen_commit
from claimchain.crypto.proofs import (
    NotAMember,
    SpkTranscript,
    VrfOutput,
    or_membership_prove,
    or_membership_verify,
    vrf_eval,
    vrf_verify,
)
from claimchain.encoding import DecodeError, pack, unpack
from claimchain.merkle import (
    ABSENT,
    INVALID,
    Node,
    decode_path,
    encode_path,
    get_path,
    verify_path,
)
from claimchain.store import H, ContentStore

PROOF_MAGIC = b"CCCP\x01"


class CannotProve(ValueError):
    """The owner cannot produce a proof: some block commits outside the allowed set."""

    def __init__(self, block_index: int, reason: str):
        super().__init__(f"block {block_index}: {reason}")
        self.block_index = block_index


@dataclass(frozen=True)
class ConsistencyEntry:
    vrf: VrfOutput
    ref_proof: SpkTranscript | None
    path: tuple[Node, ...]
    value: bytes | None

    def encode(self) -> bytes:
        return pack(
            self.vrf.to_bytes(),
            self.ref_proof.to_bytes() if self.ref_proof is not None else b"",
            encode_path(list(self.path)),
            self.value if self.value is not None else b"",
        )

    @classmethod
    def decode(cls, data: bytes) -> "ConsistencyEntry":
        vrf, ref, path, value = unpack(data, 4)
        return cls(
            VrfOutput.from_bytes(vrf),
            SpkTranscript.from_bytes(ref) if ref else None,
            tuple(decode_path(path)),
            value or None,
        )


@dataclass(frozen=True)
class ConsistencyProof:
    entries: tuple[ConsistencyEntry, ...]

    def encode(self) -> bytes:
        return pack(PROOF_MAGIC, *(e.encode() for e in self.entries))

    @classmethod
    def decode(cls, data: bytes) -> "ConsistencyProof":
        fields = unpack(data)
        if not fields or fields[0] != PROOF_MAGIC:
            raise DecodeError("not a consistency proof")
        return cls(tuple(ConsistencyEntry.decode(f) for f in fields[1:]))


def allowed_scalars(allowed_blocks: Iterable[Block]) -> list[int]:
    """``H_q`` of each allowed block as it appears in a claim body."""
    return [hash_to_scalar(pad_body(b.encode())) for b in allowed_blocks]


def prove_consistency(vrf_sk: int, label: bytes, own_blocks: Sequence[Block],
                      allowed_blocks: Sequence[Block], records: Iterable[ClaimRecord],
                      store: ContentStore) -> ConsistencyProof:
    """Build the proof for ``own_blocks``.

    :param records: the owner's claim records; those for ``label`` are used.
    :param store: the owner's store, for resolution paths.
    :raises CannotProve: if a block commits to a value outside the allowed set.
    """
    allowed = allowed_scalars(allowed_blocks)
    by_index = {r.block_index: r for r in records if r.label == label}
    entries = []
    for block in own_blocks:
        p = block.payload
        if base_mul(vrf_sk) != p.pk_vrf:
            raise CannotProve(block.index, "VRF key does not match the block")
        vrf = vrf_eval(vrf_sk, vrf_input(label, p.nonce))
        key = claim_lookup_key(vrf.h)
        path = get_path(p.map_root, key, store)
        present = bool(path) and path[-1].key == key
        rec = by_index.get(block.index)
        if not present:
            if rec is not None:
                raise CannotProve(block.index, "claim record has no matching map entry")
            entries.append(ConsistencyEntry(vrf, None, tuple(path), None))
            continue
        if rec is None or rec.nonce != p.nonce:
            raise CannotProve(block.index, "no claim record for this block")
        x = hash_to_scalar(rec.body)
        try:
            ref = or_membership_prove(rec.r, x, pedersen_commit(rec.r, x), allowed)
        except NotAMember:
            raise CannotProve(block.index, "committed block is not among the allowed ones") from None
        entries.append(ConsistencyEntry(vrf, ref, tuple(path), store.get(path[-1].value_hash)))
    return ConsistencyProof(tuple(entries))


@dataclass
class ConsistencyCheck:
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.ok


def check_consistency(label: bytes, own_blocks: Sequence[Block], allowed_blocks: Sequence[Block],
                      proof: ConsistencyProof, store: ContentStore | None = None,
                      validate: bool = True) -> ConsistencyCheck:
    """Verify a consistency proof; failures name the offending block index.

    Absent claims (verified by a resolution path) impose no constraint.
    ``store`` supplies encoded claims the proof omits. With ``validate`` the
    two block sequences must also be valid chain segments.
    """
    result = ConsistencyCheck()
    if validate:
        for name, seq in (("own", own_blocks), ("allowed", allowed_blocks)):
            v = validate_blocks(list(seq))
            if not v:
                result.failures.append((v.failed_index, f"{name} chain invalid: {v.reason}"))
        if result.failures:
            return result
    if not allowed_blocks:
        return ConsistencyCheck([(-1, "empty allowed set")])
    if len(proof.entries) != len(own_blocks):
        return ConsistencyCheck([(-1, "proof does not cover every block")])
    allowed = allowed_scalars(allowed_blocks)
    for block, entry in zip(own_blocks, proof.entries):
        p = block.payload
        if not vrf_verify(p.pk_vrf, vrf_input(label, p.nonce), entry.vrf):
            result.failures.append((block.index, "VRF proof invalid"))
            continue
        key = claim_lookup_key(entry.vrf.h)
        resolved = verify_path(p.map_root, key, list(entry.path))
        if resolved is INVALID:
            result.failures.append((block.index, "resolution path invalid"))
            continue
        if resolved is ABSENT:
            if entry.ref_proof is not None:
                result.failures.append((block.index, "membership proof for an absent claim"))
            continue
        value = entry.value
        if value is None and store is not None:
            value = store.get(resolved)
        if value is None or H(value) != resolved:
            result.failures.append((block.index, "encoded claim missing or mismatched"))
            continue
        try:
            com = EncodedClaim.from_value(key, value).commitment
        except DecodeError:
            result.failures.append((block.index, "encoded claim malformed"))
            continue
        if entry.ref_proof is None or not or_membership_verify(com, allowed, entry.ref_proof):
            result.failures.append((block.index, "membership proof invalid"))
    return result
