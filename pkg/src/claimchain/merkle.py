"""Unique-resolution key-value Merkle tree.

Internal nodes carry a pivot: keys strictly below it live in the left
subtree, keys equal or above in the right one. A query follows pivots
from the root and ends at exactly one leaf, so a root hash can never
resolve a key to two different values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from claimchain.encoding import DecodeError, pack, unpack
from claimchain.store import H, ContentStore

LEAF_TAG = 0x00
INTERNAL_TAG = 0x01
#: Root of the map with no entries. Nothing hashes to it.
EMPTY_ROOT = bytes(32)


class DuplicateLookupKey(ValueError):
    pass


class MissingNode(LookupError):
    """The store lacks (or holds a corrupt copy of) a node the query needs."""


class _Sentinel:
    def __init__(self, name: str):
        self.name = name

    def __repr__(self) -> str:
        return self.name

    def __bool__(self) -> bool:
        return False


ABSENT = _Sentinel("ABSENT")
INVALID = _Sentinel("INVALID")


@dataclass(frozen=True)
class Leaf:
    key: bytes
    value_hash: bytes

    def encode(self) -> bytes:
        return bytes([LEAF_TAG]) + pack(self.key, self.value_hash)


@dataclass(frozen=True)
class Internal:
    pivot: bytes
    left: bytes
    right: bytes

    def encode(self) -> bytes:
        return bytes([INTERNAL_TAG]) + pack(self.pivot, self.left, self.right)


Node = Union[Leaf, Internal]


def decode_node(data: bytes) -> Node:
    if not data:
        raise DecodeError("empty node")
    tag, body = data[0], data[1:]
    if tag == LEAF_TAG:
        key, value_hash = unpack(body, 2)
        if len(value_hash) != 32:
            raise DecodeError("bad value hash")
        return Leaf(key, value_hash)
    if tag == INTERNAL_TAG:
        pivot, left, right = unpack(body, 3)
        if len(left) != 32 or len(right) != 32:
            raise DecodeError("bad child hash")
        return Internal(pivot, left, right)
    raise DecodeError(f"unknown node tag {tag}")


def build_tree(entries: Mapping[bytes, bytes] | Iterable[tuple[bytes, bytes]],
               store: ContentStore) -> bytes:
    """Build the tree over ``(key, value)`` pairs and return the root hash.

    The pivot of each internal node is the median key of its subset, which
    keeps the tree balanced and the root a function of the entry set.
    """
    items = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
    if not items:
        return EMPTY_ROOT
    items.sort(key=lambda kv: kv[0])
    for (a, _), (b, _) in zip(items, items[1:]):
        if a == b:
            raise DuplicateLookupKey(a.hex())

    def build(lo: int, hi: int) -> bytes:
        if hi - lo == 1:
            key, value = items[lo]
            return store.put(Leaf(key, store.put(value)).encode())
        mid = (lo + hi) // 2
        left = build(lo, mid)
        right = build(mid, hi)
        return store.put(Internal(items[mid][0], left, right).encode())

    return build(0, len(items))


def _fetch(store: ContentStore, h: bytes) -> Node:
    data = store.get(h)
    if data is None:
        raise MissingNode(h.hex())
    try:
        return decode_node(data)
    except DecodeError as exc:
        raise MissingNode(f"undecodable node {h.hex()}") from exc


def get_path(root: bytes, key: bytes, store: ContentStore) -> list[Node]:
    """Resolution path from the root to the leaf ``key`` resolves to."""
    if root == EMPTY_ROOT:
        return []
    path = []
    h = root
    while True:
        node = _fetch(store, h)
        path.append(node)
        if isinstance(node, Leaf):
            return path
        h = node.left if key < node.pivot else node.right


def query_tree(root: bytes, key: bytes, store: ContentStore) -> bytes | None:
    """Value stored under ``key``; ``None`` when the key is absent.

    :raises MissingNode: if the store cannot supply the path or the value.
    """
    path = get_path(root, key, store)
    if not path or path[-1].key != key:
        return None
    value = store.get(path[-1].value_hash)
    if value is None:
        raise MissingNode(path[-1].value_hash.hex())
    return value


def verify_path(root: bytes, key: bytes, path: list[Node]):
    """Check an untrusted path against ``root``.

    Returns the leaf's value hash, :data:`ABSENT`, or :data:`INVALID`.
    """
    if root == EMPTY_ROOT:
        return ABSENT if not path else INVALID
    if not path:
        return INVALID
    expected = root
    for i, node in enumerate(path):
        if not isinstance(node, (Leaf, Internal)) or H(node.encode()) != expected:
            return INVALID
        if isinstance(node, Leaf):
            if i != len(path) - 1:
                return INVALID
            return node.value_hash if node.key == key else ABSENT
        expected = node.left if key < node.pivot else node.right
    return INVALID


def encode_path(path: list[Node]) -> bytes:
    return pack(*(n.encode() for n in path))


def decode_path(data: bytes) -> list[Node]:
    return [decode_node(f) for f in unpack(data)]


def path_hashes(path: list[Node]) -> list[bytes]:
    return [H(n.encode()) for n in path]
