"""Prime-order group arithmetic over ristretto255.

Elements are written additively: ``a * P + Q``.  Both scalars and elements
have canonical 32-byte little-endian encodings, which fix every on-wire and
on-chain size in the package.
"""

from __future__ import annotations

import functools
import hashlib
import random
import secrets
from typing import Iterable, Optional, Sequence, Union

from . import _sodium
from .errors import DecodeError, DomainError

#: order of the group
q = 2**252 + 27742317777372353535851937790883648493

SCALAR_BYTES = 32
ELEMENT_BYTES = 32

_sysrand = secrets.SystemRandom()


def default_rng(rng: Optional[random.Random] = None) -> random.Random:
    return _sysrand if rng is None else rng


class Scalar:
    """Element of Z_q."""

    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value % q

    @classmethod
    def random(cls, rng: Optional[random.Random] = None) -> "Scalar":
        # 512 bits reduced mod q: statistical distance < 2^-250
        return cls(default_rng(rng).getrandbits(512))

    @classmethod
    def random_nonzero(cls, rng: Optional[random.Random] = None) -> "Scalar":
        while True:
            s = cls.random(rng)
            if s.value:
                return s

    @classmethod
    def from_bytes(cls, data: bytes) -> "Scalar":
        if len(data) != SCALAR_BYTES:
            raise DecodeError(f"scalar must be {SCALAR_BYTES} bytes, got {len(data)}")
        v = int.from_bytes(data, "little")
        if v >= q:
            raise DecodeError("non-canonical scalar encoding")
        return cls(v)

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(SCALAR_BYTES, "little")

    def inverse(self) -> "Scalar":
        if not self.value:
            raise DomainError("zero has no inverse")
        return Scalar(pow(self.value, -1, q))

    def __add__(self, other):
        if isinstance(other, Scalar):
            return Scalar(self.value + other.value)
        if isinstance(other, int):
            return Scalar(self.value + other)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Scalar):
            return Scalar(self.value - other.value)
        if isinstance(other, int):
            return Scalar(self.value - other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, int):
            return Scalar(other - self.value)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Scalar):
            return Scalar(self.value * other.value)
        if isinstance(other, int):
            return Scalar(self.value * other)
        if isinstance(other, GroupElement):
            return other._mul(self.value)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, int):
            return Scalar(self.value * other)
        return NotImplemented

    def __neg__(self) -> "Scalar":
        return Scalar(-self.value)

    def __eq__(self, other) -> bool:
        if isinstance(other, Scalar):
            return self.value == other.value
        if isinstance(other, int):
            return self.value == other % q
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Scalar", self.value))

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"Scalar({self.value:#x})"


class GroupElement:
    """Element of the prime-order group, held in its canonical encoding."""

    __slots__ = ("_enc",)

    def __init__(self, enc: bytes):
        # trusted constructor; use from_bytes for untrusted input
        self._enc = enc

    @classmethod
    def from_bytes(cls, data: bytes) -> "GroupElement":
        if len(data) != ELEMENT_BYTES:
            raise DecodeError(f"element must be {ELEMENT_BYTES} bytes, got {len(data)}")
        data = bytes(data)
        if not _sodium.is_valid_point(data):
            raise DecodeError("not a canonical ristretto255 encoding")
        return cls(data)

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(_sodium.IDENTITY)

    @classmethod
    def random(cls, rng: Optional[random.Random] = None) -> "GroupElement":
        return cls(_sodium.from_hash(default_rng(rng).randbytes(64)))

    def to_bytes(self) -> bytes:
        return self._enc

    def is_identity(self) -> bool:
        return self._enc == _sodium.IDENTITY

    def _mul(self, k: int) -> "GroupElement":
        k %= q
        if k == 0 or self._enc == _sodium.IDENTITY:
            return IDENTITY
        kb = k.to_bytes(32, "little")
        if self._enc == _G_ENC:
            return GroupElement(_sodium.scalarmult_base(kb))
        return GroupElement(_sodium.scalarmult(kb, self._enc))

    def __mul__(self, other):
        if isinstance(other, Scalar):
            return self._mul(other.value)
        if isinstance(other, int):
            return self._mul(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, int):
            return self._mul(other)
        return NotImplemented

    def __add__(self, other: "GroupElement") -> "GroupElement":
        if not isinstance(other, GroupElement):
            return NotImplemented
        return GroupElement(_sodium.add(self._enc, other._enc))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        if not isinstance(other, GroupElement):
            return NotImplemented
        return GroupElement(_sodium.sub(self._enc, other._enc))

    def __neg__(self) -> "GroupElement":
        return GroupElement(_sodium.sub(_sodium.IDENTITY, self._enc))

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self._enc == other._enc

    def __hash__(self) -> int:
        return hash(self._enc)

    def __repr__(self) -> str:
        return f"GroupElement({self._enc.hex()[:16]}...)"


Label = bytes

_G_ENC = bytes.fromhex("e2f2ae0a6abc4e71a884a961c500515f58e30b6aa582dd8db6a65945e08d2d76")
IDENTITY = GroupElement(_sodium.IDENTITY)
#: standard generator
G = GroupElement(_G_ENC)


def _hash_to_element(tag: bytes, data: bytes) -> GroupElement:
    digest = hashlib.sha512(_frame(tag) + data).digest()
    return GroupElement(_sodium.from_hash(digest))


def _frame(part: bytes) -> bytes:
    return len(part).to_bytes(4, "big") + part


def derive_generator(label: Label) -> GroupElement:
    """Map a chain label to a generator with unknown discrete log w.r.t. ``G``.

    SHA-512 of the label feeds the ristretto255 Elligator map, so the output
    is indistinguishable from a uniformly random element.
    """
    if not label:
        raise DomainError("label must be non-empty")
    return _hash_to_element(b"frontseal/label-generator", bytes(label))


#: second generator for TDH2 ciphertext proofs
GBAR = _hash_to_element(b"frontseal/gbar", b"")

HashInput = Union[GroupElement, Scalar, bytes]


def hash_to_scalar(domain_tag: bytes, inputs: Iterable[HashInput]) -> Scalar:
    """Fiat-Shamir hash of a sequence of elements, scalars and byte strings.

    Every input is framed with a type byte and a 4-byte length, so distinct
    sequences never collide by concatenation.
    """
    h = hashlib.sha512(_frame(domain_tag))
    for item in inputs:
        if isinstance(item, GroupElement):
            h.update(b"E" + _frame(item.to_bytes()))
        elif isinstance(item, Scalar):
            h.update(b"S" + _frame(item.to_bytes()))
        elif isinstance(item, (bytes, bytearray)):
            h.update(b"B" + _frame(bytes(item)))
        else:
            raise TypeError(f"cannot hash {type(item).__name__}")
    return Scalar(int.from_bytes(h.digest(), "little"))


def lagrange_coefficient(index_set: Sequence[int], i: int) -> Scalar:
    """Coefficient of share ``i`` when interpolating at x = 0 over ``index_set``."""
    indices = list(index_set)
    if i not in indices:
        raise DomainError(f"index {i} not in index set")
    if len(set(indices)) != len(indices):
        raise DomainError("duplicate indices")
    if any(j < 1 for j in indices):
        raise DomainError("indices must be >= 1")
    num, den = 1, 1
    for j in indices:
        if j == i:
            continue
        num = num * j % q
        den = den * (j - i) % q
    return Scalar(num * pow(den, -1, q))


def lagrange_coefficients(index_set: Sequence[int]) -> dict:
    """All coefficients for ``index_set``; memoized since committees reuse subsets."""
    return dict(_lagrange_table(tuple(index_set)))


@functools.lru_cache(maxsize=512)
def _lagrange_table(indices: tuple) -> tuple:
    if len(set(indices)) != len(indices):
        raise DomainError("duplicate indices")
    if any(j < 1 for j in indices):
        raise DomainError("indices must be >= 1")
    return tuple((i, lagrange_coefficient(indices, i)) for i in indices)
