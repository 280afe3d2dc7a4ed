"""Identities, inner (plaintext) transactions and the on-chain write envelope."""

from __future__ import annotations

import enum
import hashlib
import random
import struct
from dataclasses import dataclass, replace
from typing import Optional

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from ..errors import DecodeError, DomainError
from ..group import default_rng

SIG_BYTES = 64
PUB_BYTES = 32
ADDRESS_BYTES = 20


def address_of(public_key: bytes) -> str:
    return hashlib.sha256(public_key).digest()[:ADDRESS_BYTES].hex()


def verify_signature(public_key: bytes, signature: bytes, message: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True


class Identity:
    """Ed25519 signing identity; also used as a sender keypair."""

    def __init__(self, name: str, private_key: Ed25519PrivateKey):
        self.name = name
        self._sk = private_key
        self.public_key = private_key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        self.address = address_of(self.public_key)

    @classmethod
    def generate(cls, name: str, rng: Optional[random.Random] = None) -> "Identity":
        seed = default_rng(rng).randbytes(32)
        return cls(name, Ed25519PrivateKey.from_private_bytes(seed))

    def sign(self, message: bytes) -> bytes:
        return self._sk.sign(message)

    def __repr__(self) -> str:
        return f"Identity({self.name!r}, {self.address[:8]})"


SenderKeypair = Identity

_INNER = struct.Struct(">B32s20sQQI")
INNER_VERSION = 1


@dataclass(frozen=True)
class InnerTx:
    """The signed plaintext transaction: a transfer plus an opaque call payload."""

    signer: bytes
    to: str
    amount: int
    nonce: int
    call: bytes
    signature: bytes = b""

    @property
    def sender(self) -> str:
        return address_of(self.signer)

    def signing_bytes(self) -> bytes:
        return b"inner-tx" + _INNER.pack(
            INNER_VERSION, self.signer, bytes.fromhex(self.to), self.amount, self.nonce, len(self.call)
        ) + self.call

    def to_bytes(self) -> bytes:
        return self.signing_bytes()[len(b"inner-tx"):] + self.signature

    @classmethod
    def from_bytes(cls, data: bytes) -> "InnerTx":
        if len(data) < _INNER.size + SIG_BYTES:
            raise DecodeError("inner transaction too short")
        version, signer, to, amount, nonce, call_len = _INNER.unpack_from(data)
        if version != INNER_VERSION or len(data) != _INNER.size + call_len + SIG_BYTES:
            raise DecodeError("malformed inner transaction")
        call = data[_INNER.size : _INNER.size + call_len]
        return cls(signer, to.hex(), amount, nonce, call, data[-SIG_BYTES:])

    def verify(self) -> bool:
        return verify_signature(self.signer, self.signature, self.signing_bytes())


def make_inner_tx(signer: Identity, to: str, amount: int, nonce: int, call: bytes = b"") -> InnerTx:
    tx = InnerTx(signer.public_key, to, amount, nonce, bytes(call))
    return replace(tx, signature=signer.sign(tx.signing_bytes()))


class Protocol(enum.IntEnum):
    TDH2 = 1
    PVSS = 2

    @classmethod
    def parse(cls, value) -> "Protocol":
        if isinstance(value, Protocol):
            return value
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise DomainError(f"unknown protocol {value!r}; expected tdh2 or pvss") from None


_ENV_HEAD = struct.Struct(">BB32sIQ")
ENVELOPE_VERSION = 1


@dataclass(frozen=True)
class WriteTx:
    """The signed write envelope ``[c_tx, c_k, h_k]`` stored on chain.

    Layout: version, protocol, sender public key, epoch, deposit, then
    length-prefixed c_tx, c_k and h_k (empty when absent), then the
    signature over everything before it.
    """

    sender: bytes
    protocol: Protocol
    epoch: int
    c_tx: bytes
    c_k: bytes
    h_k: Optional[bytes]
    deposit_paid: int
    signature: bytes = b""

    @property
    def sender_address(self) -> str:
        return address_of(self.sender)

    def signing_bytes(self) -> bytes:
        h_k = self.h_k or b""
        parts = [
            _ENV_HEAD.pack(
                ENVELOPE_VERSION, int(self.protocol), self.sender, self.epoch, self.deposit_paid
            )
        ]
        for blob in (self.c_tx, self.c_k, h_k):
            parts.append(len(blob).to_bytes(4, "big") + blob)
        return b"".join(parts)

    def to_bytes(self) -> bytes:
        return self.signing_bytes() + self.signature

    @property
    def size(self) -> int:
        return len(self.signing_bytes()) + SIG_BYTES

    @property
    def tx_id(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()[:32]

    @classmethod
    def from_bytes(cls, data: bytes) -> "WriteTx":
        if len(data) < _ENV_HEAD.size + 12 + SIG_BYTES:
            raise DecodeError("envelope too short")
        version, proto, sender, epoch, deposit = _ENV_HEAD.unpack_from(data)
        if version != ENVELOPE_VERSION:
            raise DecodeError(f"unsupported envelope version {version}")
        try:
            protocol = Protocol(proto)
        except ValueError:
            raise DecodeError(f"unknown protocol tag {proto}") from None
        pos = _ENV_HEAD.size
        blobs = []
        for _ in range(3):
            if len(data) - pos < 4:
                raise DecodeError("truncated envelope")
            n = int.from_bytes(data[pos : pos + 4], "big")
            pos += 4
            if len(data) - pos < n:
                raise DecodeError("truncated envelope")
            blobs.append(data[pos : pos + n])
            pos += n
        if len(data) - pos != SIG_BYTES:
            raise DecodeError("bad signature length")
        c_tx, c_k, h_k = blobs
        if h_k and len(h_k) != 32:
            raise DecodeError("h_k must be 32 bytes")
        return cls(sender, protocol, epoch, c_tx, c_k, h_k or None, deposit, data[pos:])

    def verify_signature(self) -> bool:
        return verify_signature(self.sender, self.signature, self.signing_bytes())


def sign_envelope(
    signer: Identity,
    protocol: Protocol,
    epoch: int,
    c_tx: bytes,
    c_k: bytes,
    h_k: Optional[bytes],
    deposit_per_byte: int,
) -> WriteTx:
    """Build and sign an envelope whose deposit covers its own serialized size."""
    draft = WriteTx(signer.public_key, protocol, epoch, c_tx, c_k, h_k, 0)
    # the deposit field is fixed-width, so the size does not depend on its value
    tx = replace(draft, deposit_paid=deposit_per_byte * draft.size)
    return replace(tx, signature=signer.sign(tx.signing_bytes()))
