import pytest

from claimchain.store import (
    ContentStore,
    FileStore,
    H,
    IntegrityError,
    StoreView,
    decode_fragment,
    encode_fragment,
)


def test_put_get_idempotent():
    s = ContentStore()
    h = s.put(b"abc")
    assert h == H(b"abc")
    assert s.put(b"abc") == h
    assert len(s) == 1 and s.bytes_stored == 3
    assert s.get(h) == b"abc"
    assert s.get(H(b"nope")) is None


def test_corrupt_entry_reads_as_missing():
    s = ContentStore()
    h = s.put(b"abc")
    s._data[h] = b"abd"
    assert s.get(h) is None
    assert h not in s
    assert s.verify_all() == [h]


def test_fragment_roundtrip_and_subset():
    a = ContentStore([b"x", b"y", b"z"])
    frag = a.export_subset([H(b"x"), H(b"z"), H(b"missing")])
    b = ContentStore()
    assert b.import_fragment(frag) == 2
    assert H(b"x") in b and H(b"y") not in b
    assert b.import_fragment(frag) == 0
    assert decode_fragment(a.export_all())


def test_forged_fragment_is_rejected_atomically():
    frag = encode_fragment([(H(b"good"), b"good"), (H(b"x"), b"forged")])
    s = ContentStore()
    with pytest.raises(IntegrityError):
        s.import_fragment(frag)
    assert len(s) == 0


@pytest.mark.parametrize("junk", [b"", b"CCSF", b"XXXX\x01\x00\x00\x00\x00"])
def test_malformed_fragment(junk):
    with pytest.raises(ValueError):
        ContentStore().import_fragment(junk)


def test_store_view_searches_in_order():
    a, b = ContentStore([b"1"]), ContentStore([b"2"])
    v = StoreView(a, None, b)
    assert v.get(H(b"1")) == b"1" and v.get(H(b"2")) == b"2"
    assert H(b"3") not in v


def test_file_store_persists_and_skips_torn_tail(tmp_path):
    path = tmp_path / "log"
    s = FileStore(path)
    h = s.put(b"persisted")
    s.put(b"second")
    s.close()
    with open(path, "ab") as fh:
        fh.write(b"\x00" * 7)
    again = FileStore(path)
    assert again.get(h) == b"persisted" and len(again) == 2
    again.close()


def test_copy_is_independent():
    a = ContentStore([b"1"])
    b = a.copy()
    b.put(b"2")
    assert len(a) == 1 and len(b) == 2
