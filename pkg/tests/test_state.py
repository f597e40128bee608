import pytest

from claimchain.core.chain import Claim, ClaimChain, KeyRing, get_claim
from claimchain.core.state import StateError, load_state, save_state


def test_state_roundtrip(tmp_path):
    reader = KeyRing.generate()
    chain = ClaimChain()
    chain.extend([Claim.make("bob", b"k1")], [(reader.dh.pk, b"bob")])
    path = tmp_path / "state.bin"
    save_state(path, chain, "pass")
    assert b"bob" not in path.read_bytes()

    back = load_state(path, chain.store, "pass")
    assert back.block_hashes == chain.block_hashes
    assert back.records == chain.records and back.acls == chain.acls
    # the reloaded owner can keep extending
    back.extend([Claim.make("bob", b"k2")], [(reader.dh.pk, b"bob")])
    assert get_claim(reader.dh.sk, b"bob", back.head, back.store) == b"k2"


def test_wrong_passphrase_and_corruption(tmp_path):
    chain = ClaimChain()
    chain.extend()
    path = tmp_path / "state.bin"
    save_state(path, chain, "right")
    with pytest.raises(StateError):
        load_state(path, chain.store, "wrong")
    data = bytearray(path.read_bytes())
    data[-1] ^= 1
    path.write_bytes(bytes(data))
    with pytest.raises(StateError):
        load_state(path, chain.store, "right")
    path.write_bytes(b"nope")
    with pytest.raises(StateError):
        load_state(path, chain.store, "right")
