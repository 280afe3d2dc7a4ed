"""Joint-Feldman distributed key generation and verifiable resharing.

Both protocols run as synchronous rounds over a fixed-delay message bus.
Every participant is a separate object that only sees the records addressed
to it; the driver measures each participant's local compute and charges the
slowest one per round, as if the nodes ran in parallel.

Dealers caught sending a share inconsistent with their commitments are
excluded after a single complaint round.  Key-bias resistance (the Pedersen
commitment phase of the full Gennaro et al. protocol) is not provided.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import sss
from .errors import AbortError, DecodeError, DomainError
from .group import G, GroupElement, Scalar, lagrange_coefficient
from .pvss import commitment_eval
from .tdh2 import Tdh2PublicKey
from .wire import BROADCAST, Kind, Record, pack_list, unpack_list

DEFAULT_HOP_DELAY_MS = 100.0

#: fault kinds understood by run_dkg and reshare
FAULT_CRASH = "crash"
FAULT_BAD_SHARE = "bad_share"


@dataclass
class ProtocolStats:
    rounds: int = 0
    hop_delay_ms: float = DEFAULT_HOP_DELAY_MS
    compute_ms: float = 0.0
    messages: int = 0
    bytes_sent: int = 0
    excluded: Tuple[int, ...] = ()

    @property
    def network_ms(self) -> float:
        return self.rounds * self.hop_delay_ms

    @property
    def latency_ms(self) -> float:
        return self.network_ms + self.compute_ms


@dataclass
class DkgOutput:
    public_key: Tdh2PublicKey
    secret_shares: Dict[int, Scalar]
    epoch: int
    threshold: int
    roster: Tuple[str, ...]
    generation: int = 0
    stats: ProtocolStats = field(default_factory=ProtocolStats, compare=False)

    @property
    def n(self) -> int:
        return len(self.roster)

    def index_of(self, identity: str) -> int:
        return self.roster.index(identity) + 1


def default_roster(n: int) -> Tuple[str, ...]:
    return tuple(f"trustee-{i}" for i in range(1, n + 1))


class _Rounds:
    """Synchronous round driver: outgoing records are delivered next round."""

    def __init__(self, stats: ProtocolStats):
        self.stats = stats
        self.inboxes: Dict[int, List[Record]] = {}

    def run_round(
        self,
        actors: Mapping[int, object],
        step: str,
        participants: Sequence[int],
        communicates: bool = True,
    ):
        slowest = 0.0
        outgoing: List[Record] = []
        results = {}
        for idx, actor in actors.items():
            inbox = self.inboxes.get(idx, [])
            t0 = time.perf_counter()
            out, result = getattr(actor, step)(inbox)
            slowest = max(slowest, time.perf_counter() - t0)
            outgoing.extend(out)
            results[idx] = result
        self.stats.compute_ms += slowest * 1000.0
        # synchronous rounds wait out the hop delay even when nothing is sent
        if communicates:
            self.stats.rounds += 1
        self.inboxes = {p: [] for p in participants}
        for rec in outgoing:
            raw = rec.to_bytes()
            if rec.recipient == BROADCAST:
                targets = [p for p in participants if p != rec.sender]
            else:
                targets = [rec.recipient] if rec.recipient in self.inboxes else []
            for p in targets:
                self.stats.messages += 1
                self.stats.bytes_sent += len(raw)
                self.inboxes[p].append(Record.from_bytes(raw))
        return results


def _encode_points(points: Sequence[GroupElement]) -> bytes:
    return b"".join(p.to_bytes() for p in points)


def _decode_points(data: bytes) -> Tuple[GroupElement, ...]:
    if len(data) % 32:
        raise DecodeError("point list length not a multiple of 32")
    return tuple(GroupElement.from_bytes(data[i : i + 32]) for i in range(0, len(data), 32))


class _DkgParticipant:
    def __init__(self, index: int, n: int, t: int, rng: random.Random, fault: Optional[str]):
        self.index, self.n, self.t = index, n, t
        self.rng = rng
        self.fault = fault
        self.commitments: Dict[int, Tuple[GroupElement, ...]] = {}
        self.shares: Dict[int, Scalar] = {}
        self.complaints: set = set()

    def deal(self, _inbox):
        poly = sss.sample_polynomial(self.t, rng=self.rng)
        commits = [a * G for a in poly.coefficients]
        out = [Record(Kind.DKG_COMMIT, self.index, BROADCAST, _encode_points(commits))]
        for j in range(1, self.n + 1):
            share = sss.eval(poly, j).value
            if self.fault == FAULT_BAD_SHARE and j != self.index:
                share = share + Scalar(1)
            out.append(Record(Kind.DKG_SHARE, self.index, j, share.to_bytes()))
        self.commitments[self.index] = tuple(commits)
        self.shares[self.index] = sss.eval(poly, self.index).value
        return out, None

    def verify(self, inbox):
        for rec in inbox:
            if rec.kind == Kind.DKG_COMMIT:
                commits = _decode_points(rec.payload)
                if len(commits) == self.t:
                    self.commitments[rec.sender] = commits
            elif rec.kind == Kind.DKG_SHARE and rec.recipient == self.index:
                self.shares[rec.sender] = Scalar.from_bytes(rec.payload)
        bad = []
        for dealer in range(1, self.n + 1):
            if dealer == self.index:
                continue
            commits = self.commitments.get(dealer)
            share = self.shares.get(dealer)
            if commits is None and share is None:
                continue  # silent dealer, excluded without a complaint
            if commits is None or share is None or share * G != commitment_eval(commits, self.index):
                bad.append(dealer)
        if not bad:
            return [], None
        payload = pack_list([d.to_bytes(4, "big") for d in bad])
        return [Record(Kind.DKG_COMPLAINT, self.index, BROADCAST, payload)], None

    def finalize(self, inbox):
        for rec in inbox:
            if rec.kind == Kind.DKG_COMPLAINT:
                self.complaints.update(int.from_bytes(x, "big") for x in unpack_list(rec.payload))
        qual = sorted(d for d in self.commitments if d not in self.complaints and d in self.shares)
        if len(qual) < self.t:
            raise AbortError(f"only {len(qual)} qualified dealers, need {self.t}")
        sk = Scalar(sum(self.shares[d].value for d in qual))
        return [], (tuple(qual), sk)


def _aggregate_commitments(per_dealer: Sequence[Sequence[GroupElement]], weights=None):
    t = len(per_dealer[0])
    agg = []
    for k in range(t):
        acc = None
        for pos, commits in enumerate(per_dealer):
            term = commits[k] if weights is None else weights[pos] * commits[k]
            acc = term if acc is None else acc + term
        agg.append(acc)
    return agg


def run_dkg(
    n: int,
    t: int,
    rng: Optional[random.Random] = None,
    *,
    epoch: int = 0,
    roster: Optional[Sequence[str]] = None,
    faults: Optional[Mapping[int, str]] = None,
    hop_delay_ms: float = DEFAULT_HOP_DELAY_MS,
) -> DkgOutput:
    """Generate an epoch key whose secret exists only as (t, n) shares."""
    if not 1 <= t <= n:
        raise DomainError(f"need 1 <= t <= n, got t={t}, n={n}")
    rng = rng if rng is not None else random.SystemRandom()
    roster = tuple(roster) if roster is not None else default_roster(n)
    if len(roster) != n:
        raise DomainError("roster length must equal n")
    faults = dict(faults or {})
    stats = ProtocolStats(hop_delay_ms=hop_delay_ms)
    live = [i for i in range(1, n + 1) if faults.get(i) != FAULT_CRASH]
    actors = {
        i: _DkgParticipant(i, n, t, random.Random(rng.getrandbits(128)), faults.get(i)) for i in live
    }
    driver = _Rounds(stats)
    driver.run_round(actors, "deal", live)
    driver.run_round(actors, "verify", live)
    results = driver.run_round(actors, "finalize", live, communicates=False)

    quals = {r[0] for r in results.values()}
    if len(quals) != 1:
        raise AbortError("participants disagree on the qualified set")
    qual = quals.pop()
    stats.excluded = tuple(i for i in range(1, n + 1) if i not in qual)

    t0 = time.perf_counter()
    any_actor = actors[qual[0]]
    agg = _aggregate_commitments([any_actor.commitments[d] for d in qual])
    vks = tuple(commitment_eval(agg, j) for j in range(1, n + 1))
    stats.compute_ms += (time.perf_counter() - t0) * 1000.0

    shares = {i: r[1] for i, r in results.items()}
    return DkgOutput(Tdh2PublicKey(agg[0], vks), shares, epoch, t, roster, 0, stats)


class _OldHolder:
    def __init__(self, index, sk, n_new, t_new, rng, fault):
        self.index, self.sk, self.n_new, self.t_new = index, sk, n_new, t_new
        self.rng, self.fault = rng, fault

    def deal(self, _inbox):
        poly = sss.sample_polynomial(self.t_new, secret=self.sk, rng=self.rng)
        commits = [a * G for a in poly.coefficients]
        out = [Record(Kind.RESHARE_COMMIT, self.index, BROADCAST, _encode_points(commits))]
        for j in range(1, self.n_new + 1):
            sub = sss.eval(poly, j).value
            if self.fault == FAULT_BAD_SHARE:
                sub = sub + Scalar(1)
            out.append(Record(Kind.RESHARE_SUBSHARE, self.index, _NEW_BASE + j, sub.to_bytes()))
        return out, None

    def verify(self, _inbox):
        return [], None

    def finalize(self, _inbox):
        return [], None


# new-committee members are addressed at _NEW_BASE + j on the bus
_NEW_BASE = 1 << 20


class _NewHolder:
    def __init__(self, j, t_new, old_vks, old_t):
        self.j, self.t_new, self.old_vks, self.old_t = j, t_new, old_vks, old_t
        self.commitments: Dict[int, Tuple[GroupElement, ...]] = {}
        self.subshares: Dict[int, Scalar] = {}
        self.complaints: set = set()

    def deal(self, _inbox):
        return [], None

    def verify(self, inbox):
        for rec in inbox:
            if rec.kind == Kind.RESHARE_COMMIT:
                commits = _decode_points(rec.payload)
                if len(commits) == self.t_new:
                    self.commitments[rec.sender] = commits
            elif rec.kind == Kind.RESHARE_SUBSHARE:
                self.subshares[rec.sender] = Scalar.from_bytes(rec.payload)
        bad = []
        for i, commits in self.commitments.items():
            sub = self.subshares.get(i)
            if (
                sub is None
                or commits[0] != self.old_vks[i - 1]
                or sub * G != commitment_eval(commits, self.j)
            ):
                bad.append(i)
        if not bad:
            return [], None
        payload = pack_list([i.to_bytes(4, "big") for i in bad])
        return [Record(Kind.RESHARE_COMPLAINT, _NEW_BASE + self.j, BROADCAST, payload)], None

    def finalize(self, inbox):
        for rec in inbox:
            if rec.kind == Kind.RESHARE_COMPLAINT:
                self.complaints.update(int.from_bytes(x, "big") for x in unpack_list(rec.payload))
        valid = sorted(
            i for i in self.commitments if i not in self.complaints and i in self.subshares
        )
        if len(valid) < self.old_t:
            raise AbortError(f"only {len(valid)} valid old dealers, need {self.old_t}")
        qualified = valid[: self.old_t]
        sk = Scalar(0)
        for i in qualified:
            sk = sk + lagrange_coefficient(qualified, i) * self.subshares[i]
        return [], (tuple(qualified), sk)


def reshare(
    old: DkgOutput,
    new_roster: Sequence[str],
    t_new: int,
    rng: Optional[random.Random] = None,
    *,
    live: Optional[Sequence[int]] = None,
    faults: Optional[Mapping[int, str]] = None,
    hop_delay_ms: float = DEFAULT_HOP_DELAY_MS,
) -> DkgOutput:
    """Hand the epoch key to ``new_roster`` without changing the public key.

    ``live`` restricts which old indices take part; ``faults`` maps old
    indices to a fault kind.
    """
    new_roster = tuple(new_roster)
    n_new = len(new_roster)
    if not 1 <= t_new <= n_new:
        raise DomainError(f"need 1 <= t_new <= n_new, got t_new={t_new}, n_new={n_new}")
    rng = rng if rng is not None else random.SystemRandom()
    faults = dict(faults or {})
    candidates = sorted(old.secret_shares) if live is None else sorted(live)
    dealers = [
        i for i in candidates if i in old.secret_shares and faults.get(i) != FAULT_CRASH
    ]
    if len(dealers) < old.threshold:
        raise AbortError(f"only {len(dealers)} live old trustees, need {old.threshold}")

    stats = ProtocolStats(hop_delay_ms=hop_delay_ms)
    actors: Dict[int, object] = {}
    for i in dealers:
        actors[i] = _OldHolder(
            i, old.secret_shares[i], n_new, t_new, random.Random(rng.getrandbits(128)), faults.get(i)
        )
    old_vks = old.public_key.verification_keys
    for j in range(1, n_new + 1):
        actors[_NEW_BASE + j] = _NewHolder(j, t_new, old_vks, old.threshold)
    participants = list(actors)
    driver = _Rounds(stats)
    driver.run_round(actors, "deal", participants)
    driver.run_round(actors, "verify", participants)
    results = driver.run_round(actors, "finalize", participants, communicates=False)

    new_results = {k - _NEW_BASE: v for k, v in results.items() if k >= _NEW_BASE}
    quals = {r[0] for r in new_results.values()}
    if len(quals) != 1:
        raise AbortError("new trustees disagree on the qualified set")
    qualified = quals.pop()
    stats.excluded = tuple(i for i in dealers if i not in qualified)

    t0 = time.perf_counter()
    holder = actors[_NEW_BASE + 1]
    weights = [lagrange_coefficient(qualified, i) for i in qualified]
    agg = _aggregate_commitments([holder.commitments[i] for i in qualified], weights)
    if agg[0] != old.public_key.pk:
        raise AbortError("resharing would change the public key")
    vks = tuple(commitment_eval(agg, j) for j in range(1, n_new + 1))
    stats.compute_ms += (time.perf_counter() - t0) * 1000.0

    shares = {j: r[1] for j, r in new_results.items()}
    return DkgOutput(
        Tdh2PublicKey(old.public_key.pk, vks),
        shares,
        old.epoch,
        t_new,
        new_roster,
        old.generation + 1,
        stats,
    )


def dealer_keygen(
    n: int,
    t: int,
    rng: Optional[random.Random] = None,
    *,
    epoch: int = 0,
    roster: Optional[Sequence[str]] = None,
) -> DkgOutput:
    """Single trusted dealer key setup with the same output shape as :func:`run_dkg`.

    For benchmarks that need key material quickly at large n.  The dealer
    learns the secret, so this has no place in a real deployment.
    """
    if not 1 <= t <= n:
        raise DomainError(f"need 1 <= t <= n, got t={t}, n={n}")
    roster = tuple(roster) if roster is not None else default_roster(n)
    poly = sss.sample_polynomial(t, rng=rng)
    shares = {s.index: s.value for s in sss.deal_shares(poly, n)}
    vks = tuple(shares[i] * G for i in range(1, n + 1))
    return DkgOutput(Tdh2PublicKey(poly.secret * G, vks), shares, epoch, t, roster, 0)
