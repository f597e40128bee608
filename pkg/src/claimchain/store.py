"""Content-addressable store: every key is the SHA-256 of its value.

Stores are insert-only. :class:`ContentStore` lives in memory,
:class:`FileStore` additionally appends every new entry to a log file and
replays it on open. Fragments are the unit exchanged between users.
"""

from __future__ import annotations

import hashlib
import logging
import os
import struct
import threading
from pathlib import Path
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

FRAGMENT_MAGIC = b"CCSF"
FRAGMENT_VERSION = 1
_REC = struct.Struct(">32sI")


class IntegrityError(ValueError):
    """A (hash, value) pair failed ``hash == H(value)``."""


def H(value: bytes) -> bytes:
    return hashlib.sha256(value).digest()


class ContentStore:
    def __init__(self, entries: Iterable[bytes] = ()):
        self._data: dict[bytes, bytes] = {}
        self._lock = threading.Lock()
        #: hashes whose stored bytes were found not to match
        self.corrupt: set[bytes] = set()
        self.bytes_stored = 0
        for v in entries:
            self.put(v)

    def put(self, value: bytes) -> bytes:
        value = bytes(value)
        h = H(value)
        with self._lock:
            if h not in self._data:
                self._data[h] = value
                self.bytes_stored += len(value)
                self._persist(h, value)
        return h

    def _persist(self, h: bytes, value: bytes) -> None:
        pass

    def get(self, h: bytes) -> bytes | None:
        """Return the value for ``h``, or ``None`` if missing or corrupt."""
        value = self._data.get(h)
        if value is None:
            return None
        if H(value) != h:
            if h not in self.corrupt:
                log.warning("corrupt store entry %s", h.hex())
                self.corrupt.add(h)
            return None
        return value

    def __contains__(self, h: bytes) -> bool:
        return self.get(h) is not None

    def __len__(self) -> int:
        return len(self._data)

    def __iter__(self) -> Iterator[bytes]:
        return iter(list(self._data))

    def verify_all(self) -> list[bytes]:
        """Full scan; returns the hashes of entries that fail the hash check."""
        return [h for h, v in list(self._data.items()) if H(v) != h]

    def copy(self) -> "ContentStore":
        other = ContentStore()
        other._data = dict(self._data)
        other.bytes_stored = self.bytes_stored
        return other

    def export_subset(self, hashes: Iterable[bytes]) -> bytes:
        """Serialize the listed entries; unknown hashes are skipped."""
        items = []
        for h in dict.fromkeys(hashes):
            v = self.get(h)
            if v is not None:
                items.append((h, v))
        return encode_fragment(items)

    def export_all(self) -> bytes:
        return self.export_subset(list(self._data))

    def import_fragment(self, data: bytes) -> int:
        """Admit every pair of a fragment, or none of them.

        :returns: number of entries that were new to this store.
        :raises IntegrityError: if any pair fails the hash check or the
            fragment is malformed.
        """
        items = decode_fragment(data)
        for h, v in items:
            if H(v) != h:
                raise IntegrityError(f"forged entry {h.hex()}")
        before = len(self._data)
        for _, v in items:
            self.put(v)
        return len(self._data) - before


class StoreView:
    """Read-only union of several stores, searched in order."""

    def __init__(self, *stores):
        self.stores = [s for s in stores if s is not None]

    def get(self, h: bytes) -> bytes | None:
        for s in self.stores:
            v = s.get(h)
            if v is not None:
                return v
        return None

    def __contains__(self, h: bytes) -> bool:
        return self.get(h) is not None


class FileStore(ContentStore):
    """Append-only log-backed store."""

    def __init__(self, path: str | os.PathLike):
        super().__init__()
        self.path = Path(path)
        self._fh = None
        if self.path.exists():
            data = self.path.read_bytes()
            for h, v in _iter_records(data, strict=False):
                if H(v) == h and h not in self._data:
                    self._data[h] = v
                    self.bytes_stored += len(v)
        self._fh = open(self.path, "ab")

    def _persist(self, h: bytes, value: bytes) -> None:
        if self._fh is not None:
            self._fh.write(_REC.pack(h, len(value)) + value)
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "FileStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def open_store(path: str | os.PathLike | None = None) -> ContentStore:
    """In-memory store when ``path`` is None, log-backed otherwise."""
    return ContentStore() if path is None else FileStore(path)


def encode_fragment(items: Iterable[tuple[bytes, bytes]]) -> bytes:
    items = list(items)
    out = bytearray(FRAGMENT_MAGIC)
    out.append(FRAGMENT_VERSION)
    out += struct.pack(">I", len(items))
    for h, v in items:
        out += _REC.pack(h, len(v)) + v
    return bytes(out)


def _iter_records(data: bytes, strict: bool = True) -> Iterator[tuple[bytes, bytes]]:
    pos = 0
    while pos < len(data):
        if pos + _REC.size > len(data):
            if strict:
                raise IntegrityError("truncated record header")
            return
        h, size = _REC.unpack_from(data, pos)
        pos += _REC.size
        if pos + size > len(data):
            if strict:
                raise IntegrityError("truncated record body")
            return
        yield h, bytes(data[pos:pos + size])
        pos += size


def decode_fragment(data: bytes) -> list[tuple[bytes, bytes]]:
    if len(data) < 9 or data[:4] != FRAGMENT_MAGIC:
        raise IntegrityError("not a store fragment")
    if data[4] != FRAGMENT_VERSION:
        raise IntegrityError(f"unsupported fragment version {data[4]}")
    (count,) = struct.unpack_from(">I", data, 5)
    items = list(_iter_records(data[9:]))
    if len(items) != count:
        raise IntegrityError("record count mismatch")
    return items
