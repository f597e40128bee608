"""Canonical length-prefixed encoding shared by every wire format.

A field sequence is encoded as the concatenation of ``len(field)`` as a
4-byte big-endian integer followed by the field bytes. This is the exact
preimage used for hashing and signing throughout the package.
"""

from __future__ import annotations

import struct

_LEN = struct.Struct(">I")


class DecodeError(ValueError):
    """Raised when bytes do not parse as the expected canonical encoding."""


def pack(*fields: bytes) -> bytes:
    out = bytearray()
    for f in fields:
        out += _LEN.pack(len(f))
        out += f
    return bytes(out)


def unpack(data: bytes, count: int | None = None) -> list[bytes]:
    """Split ``data`` back into fields.

    :param count: if given, the exact number of fields expected.
    :raises DecodeError: on truncation, trailing bytes or a wrong count.
    """
    fields = []
    pos = 0
    n = len(data)
    while pos < n:
        if pos + 4 > n:
            raise DecodeError("truncated length prefix")
        (size,) = _LEN.unpack_from(data, pos)
        pos += 4
        if pos + size > n:
            raise DecodeError("truncated field")
        fields.append(bytes(data[pos:pos + size]))
        pos += size
    if count is not None and len(fields) != count:
        raise DecodeError(f"expected {count} fields, got {len(fields)}")
    return fields


def pack_int(value: int, width: int = 8) -> bytes:
    return value.to_bytes(width, "big")


def unpack_int(data: bytes, width: int = 8) -> int:
    if len(data) != width:
        raise DecodeError(f"expected {width}-byte integer")
    return int.from_bytes(data, "big")
