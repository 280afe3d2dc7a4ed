"""Versioned, length-prefixed binary records exchanged on the simulated bus.

Layout::

    version (1) | kind (1) | sender (4) | recipient (4) | payload length (4) | payload

Recipient 0 denotes a broadcast.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from typing import Iterator, List

from .errors import DecodeError

WIRE_VERSION = 1
BROADCAST = 0
_HEADER = struct.Struct(">BBIII")


class Kind(enum.IntEnum):
    DKG_COMMIT = 1
    DKG_SHARE = 2
    DKG_COMPLAINT = 3
    RESHARE_COMMIT = 4
    RESHARE_SUBSHARE = 5
    RESHARE_COMPLAINT = 6
    SHARE_RELEASE = 10
    SHARE_REFUSAL = 11
    KEY_PROPAGATION = 12


@dataclass(frozen=True)
class Record:
    kind: Kind
    sender: int
    recipient: int
    payload: bytes

    def to_bytes(self) -> bytes:
        return (
            _HEADER.pack(WIRE_VERSION, int(self.kind), self.sender, self.recipient, len(self.payload))
            + self.payload
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Record":
        records = list(iter_records(data))
        if len(records) != 1:
            raise DecodeError("expected exactly one record")
        return records[0]


def iter_records(data: bytes) -> Iterator[Record]:
    pos = 0
    while pos < len(data):
        if len(data) - pos < _HEADER.size:
            raise DecodeError("truncated record header")
        version, kind, sender, recipient, length = _HEADER.unpack_from(data, pos)
        if version != WIRE_VERSION:
            raise DecodeError(f"unsupported wire version {version}")
        try:
            kind = Kind(kind)
        except ValueError:
            raise DecodeError(f"unknown record kind {kind}") from None
        pos += _HEADER.size
        if len(data) - pos < length:
            raise DecodeError("truncated record payload")
        yield Record(kind, sender, recipient, bytes(data[pos : pos + length]))
        pos += length


def pack_list(items: List[bytes]) -> bytes:
    return b"".join(len(x).to_bytes(4, "big") + x for x in items)


def unpack_list(data: bytes) -> List[bytes]:
    out, pos = [], 0
    while pos < len(data):
        if len(data) - pos < 4:
            raise DecodeError("truncated list item")
        n = int.from_bytes(data[pos : pos + 4], "big")
        pos += 4
        if len(data) - pos < n:
            raise DecodeError("truncated list item")
        out.append(data[pos : pos + n])
        pos += n
    return out
