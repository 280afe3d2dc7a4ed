"""Symmetric layer: key derivation from group elements and an AEAD envelope.

Envelope layout (version 1)::

    version (1) || nonce (12) || ChaCha20-Poly1305 ciphertext || tag (16)
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Optional

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from .errors import AuthError, DecodeError
from .group import GroupElement, default_rng

ENVELOPE_VERSION = 1
NONCE_BYTES = 12
TAG_BYTES = 16
#: bytes added to every plaintext by :func:`seal`
OVERHEAD = 1 + NONCE_BYTES + TAG_BYTES

_KDF_TAG = b"frontseal/kdf/v1"
_AAD = b"frontseal/ctx/v1"


@dataclass(frozen=True, repr=False)
class SymmetricKey:
    key: bytes

    def __post_init__(self):
        if len(self.key) != 32:
            raise DecodeError("symmetric key must be 32 bytes")

    def __repr__(self) -> str:
        return "SymmetricKey(<redacted>)"


def derive_key(point: GroupElement) -> SymmetricKey:
    return SymmetricKey(hashlib.blake2b(point.to_bytes(), digest_size=32, key=_KDF_TAG).digest())


def key_hash(k: SymmetricKey) -> bytes:
    """Commitment h_k = H(k) published alongside the ciphertext."""
    return hashlib.sha256(b"frontseal/hk" + k.key).digest()


def seal(k: SymmetricKey, plaintext: bytes, rng: Optional[random.Random] = None) -> bytes:
    nonce = default_rng(rng).randbytes(NONCE_BYTES)
    body = ChaCha20Poly1305(k.key).encrypt(nonce, bytes(plaintext), _AAD)
    return bytes([ENVELOPE_VERSION]) + nonce + body


def open(k: SymmetricKey, envelope: bytes) -> bytes:  # noqa: A001 - the AEAD verb
    if len(envelope) < OVERHEAD or envelope[0] != ENVELOPE_VERSION:
        raise AuthError("malformed envelope")
    nonce = envelope[1 : 1 + NONCE_BYTES]
    try:
        return ChaCha20Poly1305(k.key).decrypt(nonce, envelope[1 + NONCE_BYTES :], _AAD)
    except InvalidTag:
        raise AuthError("authentication failed") from None
