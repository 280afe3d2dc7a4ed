"""TDH2 threshold encryption of a key-encapsulation point.

The label is bound into the ciphertext proof but is not serialized: every
party supplies the chain's own label when verifying.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .errors import DecodeError, DomainError, RefusalError, ThresholdError
from .group import (
    G,
    GBAR,
    ELEMENT_BYTES,
    SCALAR_BYTES,
    GroupElement,
    Label,
    Scalar,
    hash_to_scalar,
    lagrange_coefficients,
)

H1_TAG = b"frontseal/tdh2/H1"
H2_TAG = b"frontseal/tdh2/H2"

CIPHERTEXT_BYTES = 3 * ELEMENT_BYTES + 2 * SCALAR_BYTES
SHARE_BYTES = 4 + ELEMENT_BYTES + 2 * SCALAR_BYTES


@dataclass(frozen=True)
class Tdh2PublicKey:
    pk: GroupElement
    verification_keys: Tuple[GroupElement, ...]

    @property
    def n(self) -> int:
        return len(self.verification_keys)

    def h(self, index: int) -> GroupElement:
        if not 1 <= index <= self.n:
            raise DomainError(f"no verification key for index {index}")
        return self.verification_keys[index - 1]

    def to_bytes(self) -> bytes:
        out = [self.pk.to_bytes(), len(self.verification_keys).to_bytes(4, "big")]
        out += [h.to_bytes() for h in self.verification_keys]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Tdh2PublicKey":
        if len(data) < 36:
            raise DecodeError("truncated public key")
        pk = GroupElement.from_bytes(data[:32])
        n = int.from_bytes(data[32:36], "big")
        if len(data) != 36 + 32 * n:
            raise DecodeError("public key length mismatch")
        hs = tuple(GroupElement.from_bytes(data[36 + 32 * i : 68 + 32 * i]) for i in range(n))
        return cls(pk, hs)


@dataclass(frozen=True)
class Tdh2Ciphertext:
    c: GroupElement
    u: GroupElement
    u_bar: GroupElement
    e: Scalar
    f: Scalar

    def to_bytes(self) -> bytes:
        return b"".join(
            (
                self.c.to_bytes(),
                self.u.to_bytes(),
                self.u_bar.to_bytes(),
                self.e.to_bytes(),
                self.f.to_bytes(),
            )
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Tdh2Ciphertext":
        if len(data) != CIPHERTEXT_BYTES:
            raise DecodeError(f"TDH2 ciphertext must be {CIPHERTEXT_BYTES} bytes")
        return cls(
            GroupElement.from_bytes(data[0:32]),
            GroupElement.from_bytes(data[32:64]),
            GroupElement.from_bytes(data[64:96]),
            Scalar.from_bytes(data[96:128]),
            Scalar.from_bytes(data[128:160]),
        )


@dataclass(frozen=True)
class Tdh2Share:
    index: int
    u_i: GroupElement
    e_i: Scalar
    f_i: Scalar

    def to_bytes(self) -> bytes:
        return (
            self.index.to_bytes(4, "big")
            + self.u_i.to_bytes()
            + self.e_i.to_bytes()
            + self.f_i.to_bytes()
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Tdh2Share":
        if len(data) != SHARE_BYTES:
            raise DecodeError(f"TDH2 share must be {SHARE_BYTES} bytes")
        index = int.from_bytes(data[:4], "big")
        if index < 1:
            raise DecodeError("share index must be >= 1")
        return cls(
            index,
            GroupElement.from_bytes(data[4:36]),
            Scalar.from_bytes(data[36:68]),
            Scalar.from_bytes(data[68:100]),
        )


def _h1(c, u, u_bar, w, w_bar, label: Label) -> Scalar:
    return hash_to_scalar(H1_TAG, (c, u, u_bar, w, w_bar, bytes(label)))


def _h2(u_i, u_hat, h_hat) -> Scalar:
    return hash_to_scalar(H2_TAG, (u_i, u_hat, h_hat))


def encrypt_with_randomness(
    pk: Tdh2PublicKey, payload_point: GroupElement, label: Label, r: Scalar, s: Scalar
) -> Tdh2Ciphertext:
    """Deterministic core of :func:`encrypt`; exposed for known-answer tests."""
    c = r * pk.pk + payload_point
    u = r * G
    u_bar = r * GBAR
    w = s * G
    w_bar = s * GBAR
    e = _h1(c, u, u_bar, w, w_bar, label)
    f = s + r * e
    return Tdh2Ciphertext(c, u, u_bar, e, f)


def encrypt(
    pk: Tdh2PublicKey,
    payload_point: GroupElement,
    label: Label,
    rng: Optional[random.Random] = None,
) -> Tdh2Ciphertext:
    if not label:
        raise DomainError("label must be non-empty")
    return encrypt_with_randomness(
        pk, payload_point, label, Scalar.random_nonzero(rng), Scalar.random(rng)
    )


def verify_ciphertext(ct: Tdh2Ciphertext, label: Label) -> bool:
    """Check the proof that log_g(u) == log_gbar(u_bar) under ``label``."""
    w = ct.f * G - ct.e * ct.u
    w_bar = ct.f * GBAR - ct.e * ct.u_bar
    return ct.e == _h1(ct.c, ct.u, ct.u_bar, w, w_bar, label)


def create_share(
    sk_i: Scalar,
    index: int,
    ct: Tdh2Ciphertext,
    label: Label,
    rng: Optional[random.Random] = None,
    *,
    verified: bool = False,
) -> Tdh2Share:
    """Decryption share u_i = sk_i * u with a proof that it matches h_i.

    Raises RefusalError if the ciphertext does not verify under ``label``.
    Pass ``verified=True`` only when the caller has just run
    :func:`verify_ciphertext` on this exact ciphertext and label.
    """
    if index < 1:
        raise DomainError("trustee index must be >= 1")
    if not verified and not verify_ciphertext(ct, label):
        raise RefusalError("ciphertext proof does not verify; refusing to decrypt")
    u_i = sk_i * ct.u
    s_i = Scalar.random(rng)
    u_hat = s_i * ct.u
    h_hat = s_i * G
    e_i = _h2(u_i, u_hat, h_hat)
    f_i = s_i + sk_i * e_i
    return Tdh2Share(index, u_i, e_i, f_i)


def verify_share(ct: Tdh2Ciphertext, share: Tdh2Share, h_i: GroupElement) -> bool:
    u_hat = share.f_i * ct.u - share.e_i * share.u_i
    h_hat = share.f_i * G - share.e_i * h_i
    return share.e_i == _h2(share.u_i, u_hat, h_hat)


def combine(ct: Tdh2Ciphertext, shares: Sequence[Tdh2Share], t: int) -> GroupElement:
    """Recover the payload point from ``t`` pre-verified shares.

    Shares are not re-verified here.  Only the first ``t`` shares are used.
    """
    indices = [s.index for s in shares]
    if len(set(indices)) != len(indices):
        raise DomainError("duplicate share indices")
    if len(shares) < t:
        raise ThresholdError(f"need {t} shares, got {len(shares)}")
    chosen = shares[:t]
    subset = [s.index for s in chosen]
    pk_r = None
    lam = lagrange_coefficients(subset)
    for s in chosen:
        term = lam[s.index] * s.u_i
        pk_r = term if pk_r is None else pk_r + term
    return ct.c - pk_r
