"""Non-interactive sigma protocols over secp256k1.

All proofs use the Fiat-Shamir heuristic with responses ``s = w + c*x``;
the challenge hashes, in this order, the statement tag, the bases, the
public points, the nonce commitments and finally the context string.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from claimchain.encoding import DecodeError, pack, unpack
from claimchain.crypto.rand import randbelow
from claimchain.crypto.group import (
    ORDER,
    Point,
    base_mul,
    hash_to_group,
    hash_to_scalar,
    params,
    random_scalar,
    scalar_from_bytes,
    scalar_to_bytes,
)

TAG_VRF = b"claimchain/spk/vrf"
TAG_CLAIM = b"claimchain/spk/claim"
TAG_OR = b"claimchain/spk/or-membership"


@dataclass(frozen=True)
class SpkTranscript:
    challenge: int
    responses: tuple[int, ...]
    statement_tag: bytes

    def to_bytes(self) -> bytes:
        return pack(
            self.statement_tag,
            scalar_to_bytes(self.challenge),
            *(scalar_to_bytes(s) for s in self.responses),
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "SpkTranscript":
        fields = unpack(data)
        if len(fields) < 2:
            raise DecodeError("transcript too short")
        return cls(
            challenge=scalar_from_bytes(fields[1]),
            responses=tuple(scalar_from_bytes(f) for f in fields[2:]),
            statement_tag=fields[0],
        )


def _challenge(tag: bytes, bases: Sequence[Point], publics: Sequence[Point],
               commitments: Sequence[Point], context: bytes, extra: Sequence[bytes] = ()) -> int:
    preimage = pack(
        tag,
        *(b.to_bytes() for b in bases),
        *(P.to_bytes() for P in publics),
        *extra,
        *(R.to_bytes() for R in commitments),
        context,
    )
    return hash_to_scalar(preimage)


# A statement is a list of equations ``public = sum(base_j * x[idx_j])``.
Equation = tuple[Point, Sequence[tuple[Point, int]]]


def _bases(equations: Sequence[Equation]) -> list[Point]:
    return [b for _, terms in equations for b, _ in terms]


def prove_dlrep(tag: bytes, equations: Sequence[Equation], witnesses: Sequence[int],
                context: bytes, extra: Sequence[bytes] = ()) -> SpkTranscript:
    """Conjunctive proof of knowledge of discrete-log representations."""
    nonces = [random_scalar() for _ in witnesses]
    commitments = []
    for _, terms in equations:
        R = Point.identity()
        for base, idx in terms:
            R = R + base * nonces[idx]
        commitments.append(R)
    c = _challenge(tag, _bases(equations), [P for P, _ in equations], commitments, context, extra)
    responses = tuple((w + c * x) % ORDER for w, x in zip(nonces, witnesses))
    return SpkTranscript(c, responses, tag)


def verify_dlrep(tag: bytes, equations: Sequence[Equation], n_witnesses: int,
                 transcript: SpkTranscript, context: bytes, extra: Sequence[bytes] = ()) -> bool:
    if not isinstance(transcript, SpkTranscript):
        return False
    if transcript.statement_tag != tag or len(transcript.responses) != n_witnesses:
        return False
    c = transcript.challenge
    s = transcript.responses
    commitments = []
    for public, terms in equations:
        R = public * (-c)
        for base, idx in terms:
            R = R + base * s[idx]
        commitments.append(R)
    expected = _challenge(tag, _bases(equations), [P for P, _ in equations], commitments, context, extra)
    return expected == c


# --- VRF -------------------------------------------------------------------

@dataclass(frozen=True)
class VrfOutput:
    h: Point
    proof: SpkTranscript | None = None

    def to_bytes(self) -> bytes:
        return pack(self.h.to_bytes(), self.proof.to_bytes() if self.proof else b"")

    @classmethod
    def from_bytes(cls, data: bytes) -> "VrfOutput":
        h, proof = unpack(data, 2)
        return cls(Point.from_bytes(h), SpkTranscript.from_bytes(proof) if proof else None)


def vrf_keygen() -> tuple[int, Point]:
    sk = random_scalar()
    return sk, base_mul(sk)


def _vrf_equations(pk: Point, base: Point, h: Point) -> list[Equation]:
    return [(pk, [(params().g, 0)]), (h, [(base, 0)])]


def vrf_eval(sk: int, message: bytes, context: bytes = b"") -> VrfOutput:
    """``h = H_G(message)^sk`` with a proof that ``pk = g^sk`` shares the exponent."""
    base = hash_to_group(message)
    h = base * sk
    proof = prove_dlrep(TAG_VRF, _vrf_equations(base_mul(sk), base, h), [sk], context)
    return VrfOutput(h, proof)


def vrf_verify(pk: Point, message: bytes, out: VrfOutput, context: bytes = b"") -> bool:
    try:
        if out.proof is None or out.h.is_identity:
            return False
        base = hash_to_group(message)
        return verify_dlrep(TAG_VRF, _vrf_equations(pk, base, out.h), 1, out.proof, context)
    except (AttributeError, TypeError, ValueError):
        return False


# --- Claim proof -----------------------------------------------------------

@dataclass(frozen=True)
class ClaimPublics:
    """Public inputs of the claim proof.

    ``vrf_input`` is the encoded ``label || nonce`` and ``m_scalar`` is
    ``H_q`` of the claim body.
    """

    pk_vrf: Point
    h: Point
    vrf_input: bytes
    com: Point
    m_scalar: int


def _claim_statement(pub: ClaimPublics) -> tuple[list[Equation], list[bytes]]:
    p = params()
    base = hash_to_group(pub.vrf_input)
    opened = pub.com - p.g2 * pub.m_scalar
    equations = [
        (pub.pk_vrf, [(p.g, 0)]),
        (pub.h, [(base, 0)]),
        (opened, [(p.g1, 1)]),
    ]
    extra = [p.g2.to_bytes(), pub.com.to_bytes(), scalar_to_bytes(pub.m_scalar)]
    return equations, extra


def claim_spk_prove(sk_vrf: int, r: int, pub: ClaimPublics, context: bytes) -> SpkTranscript:
    """SPK{(sk, r): pk = g^sk and h = H_G(l||nonce)^sk and com = Com(r, m)}(context)."""
    equations, extra = _claim_statement(pub)
    return prove_dlrep(TAG_CLAIM, equations, [sk_vrf, r], context, extra)


def claim_spk_verify(pub: ClaimPublics, context: bytes, transcript: SpkTranscript) -> bool:
    try:
        equations, extra = _claim_statement(pub)
        return verify_dlrep(TAG_CLAIM, equations, 2, transcript, context, extra)
    except (AttributeError, TypeError, ValueError):
        return False


# --- OR-membership ---------------------------------------------------------

class NotAMember(ValueError):
    """The committed value is not in the allowed set."""


def _or_challenge(com: Point, allowed: Sequence[int], commitments: Sequence[Point], context: bytes) -> int:
    p = params()
    return _challenge(
        TAG_OR,
        [p.g1, p.g2],
        [com],
        commitments,
        context,
        [scalar_to_bytes(a) for a in allowed],
    )


def or_membership_prove(r: int, m_scalar: int, com: Point, allowed: Sequence[int],
                        context: bytes = b"") -> SpkTranscript:
    """Prove ``com = Com(r, x)`` with ``x`` among ``allowed``, hiding which.

    Responses are laid out as ``(c_1..c_t, s_1..s_t)``; the transcript
    challenge is the sum of the branch challenges.
    """
    allowed = [a % ORDER for a in allowed]
    try:
        pos = allowed.index(m_scalar % ORDER)
    except ValueError:
        raise NotAMember("committed value outside the allowed set") from None
    p = params()
    t = len(allowed)
    cs = [0] * t
    ss = [0] * t
    commitments = [Point.identity()] * t
    w = random_scalar()
    for j, a in enumerate(allowed):
        if j == pos:
            commitments[j] = p.g1 * w
            continue
        cs[j] = randbelow(ORDER)
        ss[j] = randbelow(ORDER)
        target = com - p.g2 * a
        commitments[j] = p.g1 * ss[j] - target * cs[j]
    c = _or_challenge(com, allowed, commitments, context)
    cs[pos] = (c - sum(cs)) % ORDER
    ss[pos] = (w + cs[pos] * r) % ORDER
    return SpkTranscript(c, tuple(cs) + tuple(ss), TAG_OR)


def or_membership_verify(com: Point, allowed: Sequence[int], transcript: SpkTranscript,
                         context: bytes = b"") -> bool:
    try:
        allowed = [a % ORDER for a in allowed]
        t = len(allowed)
        if t == 0 or transcript.statement_tag != TAG_OR or len(transcript.responses) != 2 * t:
            return False
        cs = transcript.responses[:t]
        ss = transcript.responses[t:]
        if sum(cs) % ORDER != transcript.challenge:
            return False
        p = params()
        commitments = [p.g1 * s - (com - p.g2 * a) * c for a, c, s in zip(allowed, cs, ss)]
        return _or_challenge(com, allowed, commitments, context) == transcript.challenge
    except (AttributeError, TypeError, ValueError):
        return False
