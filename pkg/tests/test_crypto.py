import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from claimchain.crypto import (
    AEAD_OVERHEAD,
    ORDER,
    KeyPair,
    NotAMember,
    Point,
    aead_decrypt,
    aead_encrypt,
    base_mul,
    claim_spk_prove,
    claim_spk_verify,
    dh_shared_secret,
    hash_family,
    hash_to_group,
    hash_to_scalar,
    new_symmetric_key,
    or_membership_prove,
    or_membership_verify,
    params,
    pedersen_commit,
    random_scalar,
    seeded,
    sign,
    verify,
    vrf_eval,
    vrf_keygen,
    vrf_verify,
)
from claimchain.crypto.proofs import ClaimPublics, SpkTranscript, VrfOutput
from claimchain.encoding import DecodeError, pack, unpack

scalars = st.integers(min_value=1, max_value=ORDER - 1)


# --- encoding ---------------------------------------------------------------

@given(st.lists(st.binary(max_size=64), max_size=8))
def test_pack_roundtrip(fields):
    assert unpack(pack(*fields)) == fields


def test_pack_matches_oracle():
    assert pack(b"ab", b"", b"c") == oracles.pack(b"ab", b"", b"c")


@pytest.mark.parametrize("data", [b"\x00\x00", b"\x00\x00\x00\x05abc"])
def test_unpack_rejects_truncation(data):
    with pytest.raises(DecodeError):
        unpack(data)


def test_unpack_count_mismatch():
    with pytest.raises(DecodeError):
        unpack(pack(b"a", b"b"), 3)


# --- group ------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(scalars)
def test_base_mul_matches_oracle(k):
    assert base_mul(k).to_bytes() == oracles.compress(oracles.mul(k))


@settings(max_examples=15, deadline=None)
@given(scalars, scalars)
def test_add_and_mul_match_oracle(a, b):
    pa, pb = base_mul(a), base_mul(b)
    assert (pa + pb).to_bytes() == oracles.compress(oracles.mul(a + b))
    assert (pa * b).to_bytes() == oracles.compress(oracles.mul(a * b))
    assert (pa - pb).to_bytes() == oracles.compress(oracles.mul(a - b))


def test_identity_handling():
    g = base_mul(1)
    ident = Point.identity()
    assert ident.is_identity and ident.to_bytes() == bytes(33)
    assert (g - g).is_identity
    assert g + ident == g and ident + g == g
    assert (g * ORDER).is_identity
    assert Point.from_bytes(bytes(33)).is_identity


@pytest.mark.parametrize("data", [b"\x04" + bytes(32), b"\x02" + b"\xff" * 32, b"\x02" * 10])
def test_point_from_bytes_rejects(data):
    with pytest.raises(DecodeError):
        Point.from_bytes(data)


def test_hash_family_matches_oracle():
    for i in (1, 2, 3, 4):
        assert hash_family(i, b"x") == oracles.h_family(i, b"x")
    assert len({hash_family(i, b"x") for i in (1, 2, 3, 4)}) == 4
    with pytest.raises(ValueError):
        hash_family(5, b"x")


def test_hash_to_scalar_and_group_match_oracle():
    for msg in (b"", b"alice", bytes(100)):
        assert hash_to_scalar(msg) == oracles.h_scalar(msg)
        assert hash_to_group(msg).to_bytes() == oracles.compress(oracles.h_group(msg))


def test_pedersen_generators_independent_and_commit_matches_oracle():
    p = params()
    assert len({p.g, p.g1, p.g2}) == 3
    g1 = oracles.h_group(b"claimchain/pedersen/g1")
    g2 = oracles.h_group(b"claimchain/pedersen/g2")
    r, m = 12345, 67890
    expected = oracles.add(oracles.mul(r, g1), oracles.mul(m, g2))
    assert pedersen_commit(r, m).to_bytes() == oracles.compress(expected)


def test_pedersen_homomorphic():
    assert pedersen_commit(3, 5) + pedersen_commit(4, 6) == pedersen_commit(7, 11)


# --- symmetric / signatures / DH --------------------------------------------

def test_aead_roundtrip_and_authfail():
    k = new_symmetric_key()
    ct = aead_encrypt(k, b"hello")
    assert len(ct) == 5 + AEAD_OVERHEAD
    assert aead_decrypt(k, ct) == b"hello"
    assert aead_decrypt(new_symmetric_key(), ct) is None
    bad = bytearray(ct)
    bad[-1] ^= 1
    assert aead_decrypt(k, bytes(bad)) is None
    assert aead_decrypt(k, ct[:10]) is None


def test_signatures():
    kp = KeyPair.generate()
    sig = sign(kp.sk, b"msg")
    assert len(sig) == 65
    assert verify(kp.pk, sig, b"msg")
    assert not verify(kp.pk, sig, b"other")
    assert not verify(KeyPair.generate().pk, sig, b"msg")
    assert not verify(kp.pk, sig[:-1], b"msg")
    # deterministic
    assert sign(kp.sk, b"msg") == sig


def test_dh_symmetric_and_matches_oracle():
    a, b = KeyPair.generate(), KeyPair.generate()
    s = dh_shared_secret(a.sk, b.pk)
    assert s == dh_shared_secret(b.sk, a.pk)
    assert s == oracles.compress(oracles.mul(a.sk * b.sk))


def test_seeded_randomness_is_reproducible():
    with seeded(5):
        a = [random_scalar() for _ in range(3)]
    with seeded(5):
        b = [random_scalar() for _ in range(3)]
    with seeded(6):
        c = [random_scalar() for _ in range(3)]
    assert a == b and a != c


# --- VRF --------------------------------------------------------------------

def test_vrf_roundtrip_and_uniqueness():
    sk, pk = vrf_keygen()
    out1 = vrf_eval(sk, b"label")
    out2 = vrf_eval(sk, b"label")
    assert out1.h == out2.h  # unique output even with fresh proof randomness
    assert out1.proof != out2.proof
    assert vrf_verify(pk, b"label", out1)
    assert vrf_verify(pk, b"label", VrfOutput.from_bytes(out1.to_bytes()))
    # h = H_G(m)^sk, checked against the oracle
    assert out1.h.to_bytes() == oracles.compress(oracles.mul(sk, oracles.h_group(b"label")))


def test_vrf_rejections():
    sk, pk = vrf_keygen()
    out = vrf_eval(sk, b"m")
    _, other_pk = vrf_keygen()
    assert not vrf_verify(other_pk, b"m", out)
    assert not vrf_verify(pk, b"m2", out)
    assert not vrf_verify(pk, b"m", VrfOutput(out.h + base_mul(1), out.proof))
    assert not vrf_verify(pk, b"m", VrfOutput(out.h, None))
    assert not vrf_verify(pk, b"m", out, context=b"ctx")


# --- claim proof --------------------------------------------------------------

def _claim_setup():
    sk = random_scalar()
    r = random_scalar()
    inp = b"label|nonce"
    m = hash_to_scalar(b"body")
    pub = ClaimPublics(base_mul(sk), hash_to_group(inp) * sk, inp, pedersen_commit(r, m), m)
    return sk, r, pub


def test_claim_spk_roundtrip():
    sk, r, pub = _claim_setup()
    t = b"t" * 32
    proof = claim_spk_prove(sk, r, pub, t)
    assert claim_spk_verify(pub, t, proof)
    assert claim_spk_verify(pub, t, SpkTranscript.from_bytes(proof.to_bytes()))


def test_claim_spk_rejects_wrong_statement():
    sk, r, pub = _claim_setup()
    t = b"t" * 32
    proof = claim_spk_prove(sk, r, pub, t)
    assert not claim_spk_verify(pub, b"u" * 32, proof)
    wrong_body = ClaimPublics(pub.pk_vrf, pub.h, pub.vrf_input, pub.com, hash_to_scalar(b"other"))
    assert not claim_spk_verify(wrong_body, t, proof)
    wrong_h = ClaimPublics(pub.pk_vrf, pub.h + base_mul(1), pub.vrf_input, pub.com, pub.m_scalar)
    assert not claim_spk_verify(wrong_h, t, proof)
    bumped = SpkTranscript(proof.challenge, (proof.responses[0] + 1,) + proof.responses[1:],
                           proof.statement_tag)
    assert not claim_spk_verify(pub, t, bumped)


# --- OR membership ------------------------------------------------------------

@pytest.mark.parametrize("t,pos", [(1, 0), (3, 0), (3, 2), (6, 4)])
def test_or_membership(t, pos):
    allowed = [hash_to_scalar(bytes([i])) for i in range(t)]
    r = random_scalar()
    com = pedersen_commit(r, allowed[pos])
    proof = or_membership_prove(r, allowed[pos], com, allowed, b"ctx")
    assert len(proof.responses) == 2 * t
    assert or_membership_verify(com, allowed, proof, b"ctx")
    assert not or_membership_verify(com, allowed, proof, b"other")
    assert not or_membership_verify(com, allowed[:-1] + [hash_to_scalar(b"z")], proof, b"ctx")
    assert not or_membership_verify(pedersen_commit(r + 1, allowed[pos]), allowed, proof, b"ctx")


def test_or_membership_nonmember_refuses():
    allowed = [hash_to_scalar(b"a"), hash_to_scalar(b"b")]
    x = hash_to_scalar(b"c")
    r = random_scalar()
    with pytest.raises(NotAMember):
        or_membership_prove(r, x, pedersen_commit(r, x), allowed)


def test_or_membership_forged_over_other_set_fails():
    real = [hash_to_scalar(b"a")]
    fake = [hash_to_scalar(b"f")]
    r = random_scalar()
    com = pedersen_commit(r, fake[0])
    proof = or_membership_prove(r, fake[0], com, fake)
    assert or_membership_verify(com, fake, proof)
    assert not or_membership_verify(com, real, proof)

