"""Publicly verifiable secret sharing of a group-element secret.

The dealer shares ``s = s(0) * G`` among trustees holding key pairs
``pk_i = sk_i * G``.  Polynomial commitments use the label-derived generator
``h``, so a deal made for one chain does not verify on another.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from . import sss
from .errors import DecodeError, DomainError, ThresholdError
from .group import (
    G,
    GroupElement,
    Label,
    Scalar,
    derive_generator,
    hash_to_scalar,
    lagrange_coefficients,
)

DEAL_TAG = b"frontseal/pvss/deal-dleq"
DEC_TAG = b"frontseal/pvss/dec-dleq"

PROOF_BYTES = 64
ENTRY_BYTES = 4 + 32 + PROOF_BYTES
DEAL_HEADER_BYTES = 1 + 4 + 4
DEAL_VERSION = 1


@dataclass(frozen=True)
class DleqProof:
    challenge: Scalar
    response: Scalar

    def to_bytes(self) -> bytes:
        return self.challenge.to_bytes() + self.response.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "DleqProof":
        if len(data) != PROOF_BYTES:
            raise DecodeError("DLEQ proof must be 64 bytes")
        return cls(Scalar.from_bytes(data[:32]), Scalar.from_bytes(data[32:]))


def dleq_prove(
    tag: bytes,
    base1: GroupElement,
    image1: GroupElement,
    base2: GroupElement,
    image2: GroupElement,
    witness: Scalar,
    rng: Optional[random.Random] = None,
    bind: Optional[Sequence] = None,
) -> DleqProof:
    """Chaum-Pedersen proof that log_base1(image1) == log_base2(image2).

    ``bind`` lists the statement values hashed ahead of the commitments; it
    defaults to ``(image1, image2)``.
    """
    w = Scalar.random(rng)
    a1 = w * base1
    a2 = w * base2
    stmt = (image1, image2) if bind is None else tuple(bind)
    c = hash_to_scalar(tag, (*stmt, a1, a2))
    return DleqProof(c, w - witness * c)


def dleq_verify(
    tag: bytes,
    base1: GroupElement,
    image1: GroupElement,
    base2: GroupElement,
    image2: GroupElement,
    proof: DleqProof,
    bind: Optional[Sequence] = None,
) -> bool:
    a1 = proof.response * base1 + proof.challenge * image1
    a2 = proof.response * base2 + proof.challenge * image2
    stmt = (image1, image2) if bind is None else tuple(bind)
    return proof.challenge == hash_to_scalar(tag, (*stmt, a1, a2))


@dataclass(frozen=True)
class EncryptedShare:
    index: int
    s_hat: GroupElement
    proof: DleqProof


@dataclass(frozen=True)
class PvssDeal:
    encrypted_shares: Tuple[EncryptedShare, ...]
    commitments: Tuple[GroupElement, ...]

    @property
    def threshold(self) -> int:
        return len(self.commitments)

    @property
    def n(self) -> int:
        return len(self.encrypted_shares)

    def share(self, index: int) -> EncryptedShare:
        for es in self.encrypted_shares:
            if es.index == index:
                return es
        raise DomainError(f"deal has no share for index {index}")

    def to_bytes(self) -> bytes:
        out = [
            bytes([DEAL_VERSION]),
            self.n.to_bytes(4, "big"),
            self.threshold.to_bytes(4, "big"),
        ]
        for es in self.encrypted_shares:
            out.append(es.index.to_bytes(4, "big") + es.s_hat.to_bytes() + es.proof.to_bytes())
        out += [b.to_bytes() for b in self.commitments]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PvssDeal":
        if len(data) < DEAL_HEADER_BYTES or data[0] != DEAL_VERSION:
            raise DecodeError("bad PVSS deal header")
        n = int.from_bytes(data[1:5], "big")
        t = int.from_bytes(data[5:9], "big")
        if t < 1 or len(data) != DEAL_HEADER_BYTES + ENTRY_BYTES * n + 32 * t:
            raise DecodeError("PVSS deal length mismatch")
        pos = DEAL_HEADER_BYTES
        shares = []
        for _ in range(n):
            idx = int.from_bytes(data[pos : pos + 4], "big")
            s_hat = GroupElement.from_bytes(data[pos + 4 : pos + 36])
            proof = DleqProof.from_bytes(data[pos + 36 : pos + 100])
            shares.append(EncryptedShare(idx, s_hat, proof))
            pos += ENTRY_BYTES
        commitments = tuple(
            GroupElement.from_bytes(data[pos + 32 * j : pos + 32 * (j + 1)]) for j in range(t)
        )
        indices = [s.index for s in shares]
        if len(set(indices)) != n or min(indices, default=1) < 1:
            raise DecodeError("PVSS deal indices must be distinct and >= 1")
        return cls(tuple(shares), commitments)


def deal_size(n: int, t: int) -> int:
    return DEAL_HEADER_BYTES + ENTRY_BYTES * n + 32 * t


@dataclass(frozen=True)
class PvssDecShare:
    index: int
    s_i: GroupElement
    proof: DleqProof

    def to_bytes(self) -> bytes:
        return self.index.to_bytes(4, "big") + self.s_i.to_bytes() + self.proof.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PvssDecShare":
        if len(data) != 4 + 32 + PROOF_BYTES:
            raise DecodeError("PVSS decrypted share must be 100 bytes")
        index = int.from_bytes(data[:4], "big")
        if index < 1:
            raise DecodeError("share index must be >= 1")
        return cls(index, GroupElement.from_bytes(data[4:36]), DleqProof.from_bytes(data[36:]))


def commitment_eval(commitments: Sequence[GroupElement], index: int) -> GroupElement:
    """X_i = sum_j i^j * b_j, by Horner's rule in the exponent."""
    acc = commitments[-1]
    for b in reversed(commitments[:-1]):
        acc = index * acc + b
    return acc


def deal(
    trustee_pks: Sequence[GroupElement],
    t: int,
    label: Label,
    rng: Optional[random.Random] = None,
    poly: Optional[sss.Polynomial] = None,
) -> Tuple[PvssDeal, GroupElement]:
    """Share a fresh secret point among ``trustee_pks`` (indices 1..n).

    Returns the deal and the secret point ``s(0) * G``.
    """
    n = len(trustee_pks)
    if not 1 <= t <= n:
        raise DomainError(f"need 1 <= t <= n, got t={t}, n={n}")
    h = derive_generator(label)
    if poly is None:
        poly = sss.sample_polynomial(t, rng=rng)
    elif poly.threshold != t:
        raise DomainError("polynomial degree does not match threshold")
    commitments = tuple(a * h for a in poly.coefficients)
    shares = []
    for i, pk_i in enumerate(trustee_pks, start=1):
        s_of_i = sss.eval(poly, i).value
        s_hat = s_of_i * pk_i
        x_i = s_of_i * h
        proof = dleq_prove(DEAL_TAG, h, x_i, pk_i, s_hat, s_of_i, rng)
        shares.append(EncryptedShare(i, s_hat, proof))
    return PvssDeal(tuple(shares), commitments), poly.secret * G


def verify_deal_share(deal: PvssDeal, index: int, pk_i: GroupElement, label: Label) -> bool:
    try:
        es = deal.share(index)
    except DomainError:
        return False
    if not deal.commitments:
        return False
    h = derive_generator(label)
    x_i = commitment_eval(deal.commitments, index)
    return dleq_verify(DEAL_TAG, h, x_i, pk_i, es.s_hat, es.proof)


def verify_deal(deal: PvssDeal, trustee_pks: Sequence[GroupElement], label: Label) -> bool:
    """Public verification of every encrypted share; needs no secrets."""
    if deal.n != len(trustee_pks):
        return False
    return all(
        verify_deal_share(deal, i, pk, label) for i, pk in enumerate(trustee_pks, start=1)
    )


def decrypt_share(
    sk_i: Scalar,
    deal_share: EncryptedShare,
    rng: Optional[random.Random] = None,
    g: GroupElement = G,
) -> PvssDecShare:
    if sk_i.value == 0:
        raise DomainError("trustee secret key must be non-zero")
    s_i = sk_i.inverse() * deal_share.s_hat
    pk_i = sk_i * g
    proof = dleq_prove(
        DEC_TAG, g, pk_i, s_i, deal_share.s_hat, sk_i, rng, bind=(pk_i, deal_share.s_hat, s_i)
    )
    return PvssDecShare(deal_share.index, s_i, proof)


def verify_dec_share(pk_i: GroupElement, s_hat: GroupElement, dec: PvssDecShare) -> bool:
    """Check log_G(pk_i) == log_{s_i}(s_hat)."""
    if dec.s_i.is_identity():
        return False
    return dleq_verify(DEC_TAG, G, pk_i, dec.s_i, s_hat, dec.proof, bind=(pk_i, s_hat, dec.s_i))


def reconstruct(dec_shares: Sequence[PvssDecShare], t: int) -> GroupElement:
    """Lagrange interpolation in the exponent; uses the first ``t`` shares."""
    indices = [d.index for d in dec_shares]
    if len(set(indices)) != len(indices):
        raise DomainError("duplicate share indices")
    if len(dec_shares) < t:
        raise ThresholdError(f"need {t} shares, got {len(dec_shares)}")
    chosen = dec_shares[:t]
    subset = [d.index for d in chosen]
    acc = None
    lam = lagrange_coefficients(subset)
    for d in chosen:
        term = lam[d.index] * d.s_i
        acc = term if acc is None else acc + term
    return acc
