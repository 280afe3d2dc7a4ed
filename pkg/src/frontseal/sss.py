"""Shamir (t, n) secret sharing over Z_q."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

from .errors import DomainError
from .group import Scalar, lagrange_coefficient


@dataclass(frozen=True)
class Share:
    index: int
    value: Scalar

    def __post_init__(self):
        if self.index < 1:
            raise DomainError("share index must be >= 1")


@dataclass(frozen=True)
class Polynomial:
    """Coefficients a_0..a_{t-1}; a_0 is the shared secret."""

    coefficients: tuple

    def __post_init__(self):
        if len(self.coefficients) < 1:
            raise DomainError("polynomial needs at least one coefficient")

    @property
    def threshold(self) -> int:
        return len(self.coefficients)

    @property
    def secret(self) -> Scalar:
        return self.coefficients[0]


def sample_polynomial(
    t: int,
    secret: Optional[Union[Scalar, int]] = None,
    rng: Optional[random.Random] = None,
) -> Polynomial:
    if t < 1:
        raise DomainError(f"threshold must be >= 1, got {t}")
    a0 = Scalar.random(rng) if secret is None else Scalar(int(secret))
    rest = [Scalar.random(rng) for _ in range(t - 1)]
    return Polynomial(tuple([a0, *rest]))


def eval_at(poly: Polynomial, x: int) -> Scalar:
    """Horner evaluation at an arbitrary point (x = 0 allowed; internal use)."""
    acc = 0
    for a in reversed(poly.coefficients):
        acc = acc * x + a.value
    return Scalar(acc)


def eval(poly: Polynomial, index: int) -> Share:  # noqa: A001 - mirrors the operation name
    if index < 1:
        raise DomainError("evaluating at index 0 would reveal the secret")
    return Share(index, eval_at(poly, index))


def deal_shares(poly: Polynomial, n: int) -> List[Share]:
    return [eval(poly, i) for i in range(1, n + 1)]


def interpolate_at_zero(shares: Sequence[Share]) -> Scalar:
    """Lagrange interpolation at x = 0.

    The threshold is not known here; callers must pass at least t consistent
    shares to obtain the secret.
    """
    if not shares:
        raise DomainError("need at least one share")
    indices = [s.index for s in shares]
    if len(set(indices)) != len(indices):
        raise DomainError("duplicate share indices")
    acc = Scalar(0)
    for s in shares:
        acc = acc + lagrange_coefficient(indices, s.index) * s.value
    return acc
