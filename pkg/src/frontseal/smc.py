"""Secret-management committee: trustee nodes, share aggregation and epochs.

Trustees watch the chain.  When a write tx is included they verify its
``c_k`` and prepare a decryption share; when it finalizes they sign and
release that share to a designated consensus-side aggregator.  The
aggregator verifies shares, rebuilds each key and forwards keys to the
consensus group, which checks ``h_k`` when present instead of repeating
the interpolation.
"""

from __future__ import annotations

import concurrent.futures
import random
import time
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple, Union

from . import aead, dkg, pvss, tdh2
from .chain.ledger import Chain, TxRecord, TxState
from .chain.loop import Bus
from .chain.tx import Identity, Protocol, verify_signature
from .errors import AbortError, DecodeError, DomainError, KeyRejectedError
from .group import G, GroupElement, Scalar
from .wire import Kind, Record, pack_list, unpack_list

AGGREGATOR = "aggregator"
CONSENSUS = "consensus"
ADVERSARY = "adversary"
_AGGREGATOR_ID = 0xFFFF_FFF0
_CONSENSUS_ID = 0xFFFF_FFF1
_ADVERSARY_ID = 0xFFFF_FFF2

FAULT_CRASH = "crash"
FAULT_GARBAGE = "garbage"
FAULT_WITHHOLD = "withhold"
FAULT_LEAK = "leak_early"
FAULTS = (FAULT_CRASH, FAULT_GARBAGE, FAULT_WITHHOLD, FAULT_LEAK)

Share = Union[tdh2.Tdh2Share, pvss.PvssDecShare]


# -- signed bus records --------------------------------------------------------

def _signed_bytes(kind: Kind, sender: int, recipient: int, body: bytes) -> bytes:
    return bytes([int(kind)]) + sender.to_bytes(4, "big") + recipient.to_bytes(4, "big") + body


def sign_record(identity: Identity, kind: Kind, sender: int, recipient: int, body: bytes) -> Record:
    sig = identity.sign(_signed_bytes(kind, sender, recipient, body))
    return Record(kind, sender, recipient, body + sig)


def open_record(record: Record, public_key: bytes) -> Optional[bytes]:
    """Return the record body if its signature checks out, else None."""
    if len(record.payload) < 64:
        return None
    body, sig = record.payload[:-64], record.payload[-64:]
    if not verify_signature(public_key, sig, _signed_bytes(record.kind, record.sender, record.recipient, body)):
        return None
    return body


@dataclass(frozen=True)
class ShareRelease:
    tx_id: str
    epoch: int
    generation: int
    share: bytes

    def to_bytes(self) -> bytes:
        return (
            bytes.fromhex(self.tx_id)
            + self.epoch.to_bytes(4, "big")
            + self.generation.to_bytes(4, "big")
            + self.share
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "ShareRelease":
        if len(data) < 24:
            raise DecodeError("share release too short")
        return cls(
            data[:16].hex(),
            int.from_bytes(data[16:20], "big"),
            int.from_bytes(data[20:24], "big"),
            data[24:],
        )


def decode_share(protocol: Protocol, data: bytes) -> Share:
    if protocol is Protocol.TDH2:
        return tdh2.Tdh2Share.from_bytes(data)
    return pvss.PvssDecShare.from_bytes(data)


# -- trustees ------------------------------------------------------------------

@dataclass(frozen=True)
class KeyShare:
    generation: int
    index: int
    secret: Scalar


@dataclass(frozen=True)
class PreparedShare:
    epoch: int
    generation: int
    share: bytes


class Trustee:
    """One committee member.  Its state is only touched by its own handlers."""

    def __init__(
        self,
        trustee_id: int,
        identity: Identity,
        chain: Chain,
        bus: Bus,
        *,
        fault: Optional[str] = None,
        rng: Optional[random.Random] = None,
    ):
        if fault is not None and fault not in FAULTS:
            raise DomainError(f"unknown trustee fault {fault!r}")
        self.trustee_id = trustee_id
        self.identity = identity
        self.name = identity.name
        self.chain = chain
        self.bus = bus
        self.fault = fault
        self.rng = rng if rng is not None else random.SystemRandom()
        self.key_shares: Dict[int, KeyShare] = {}
        self.pvss_keys: Dict[int, KeyShare] = {}
        self.pending: Dict[str, PreparedShare] = {}
        self.refused: Set[str] = set()
        self.released: Set[str] = set()

    # key material
    def install_share(self, epoch: int, generation: int, index: int, secret: Scalar) -> None:
        self.key_shares[epoch] = KeyShare(generation, index, secret)

    def retire(self, epoch: int) -> None:
        self.key_shares.pop(epoch, None)

    def new_pvss_key(self) -> Tuple[Scalar, GroupElement]:
        sk = Scalar.random_nonzero(self.rng)
        return sk, sk * G

    def install_pvss_key(self, roster_epoch: int, index: int, secret: Scalar) -> None:
        self.pvss_keys[roster_epoch] = KeyShare(0, index, secret)

    def serves(self, rec: TxRecord) -> bool:
        keys = self.key_shares if rec.tx.protocol is Protocol.TDH2 else self.pvss_keys
        return rec.tx.epoch in keys

    @property
    def crashed(self) -> bool:
        return self.fault == FAULT_CRASH

    # chain events
    def on_tx_included(self, rec: TxRecord) -> None:
        if self.crashed:
            return
        t0 = time.perf_counter()
        prepared, reason = self._prepare(rec)
        wall = (time.perf_counter() - t0) * 1000.0
        now, height = self.chain.loop.now_ms, self.chain.height
        if prepared is None:
            self.refused.add(rec.tx_id)
            self.chain.trace.emit(rec.tx_id, "share_refused", now, height, trustee=self.name, reason=reason)
            return
        self.pending[rec.tx_id] = prepared
        self.chain.trace.emit(
            rec.tx_id, "share_prepared", now, height, trustee=self.name, prep_wall_ms=wall
        )
        if self.fault == FAULT_LEAK:
            self._send(ADVERSARY, _ADVERSARY_ID, Kind.SHARE_RELEASE, rec.tx_id, prepared)

    def _prepare(self, rec: TxRecord) -> Tuple[Optional[PreparedShare], str]:
        tx = rec.tx
        label = self.chain.config.label
        try:
            if tx.protocol is Protocol.TDH2:
                ks = self.key_shares.get(tx.epoch)
                if ks is None:
                    return None, "no key share for epoch"
                ct = tdh2.Tdh2Ciphertext.from_bytes(tx.c_k)
                if not tdh2.verify_ciphertext(ct, label):
                    return None, "ciphertext proof invalid"
                share = tdh2.create_share(ks.secret, ks.index, ct, label, self.rng, verified=True)
            else:
                ks = self.pvss_keys.get(tx.epoch)
                if ks is None:
                    return None, "not on roster"
                deal = pvss.PvssDeal.from_bytes(tx.c_k)
                pk = self.chain.rosters[tx.epoch][0][ks.index - 1]
                if not pvss.verify_deal_share(deal, ks.index, pk, label):
                    return None, "deal share proof invalid"
                share = pvss.decrypt_share(ks.secret, deal.share(ks.index), self.rng)
        except (DecodeError, DomainError) as exc:
            return None, f"undecodable c_k: {exc}"
        return PreparedShare(tx.epoch, ks.generation, share.to_bytes()), ""

    def on_tx_finalized(self, rec: TxRecord) -> Optional[Record]:
        """Release the cached share; returns the record sent, if any."""
        if self.crashed:
            return None
        prepared = self.pending.pop(rec.tx_id, None)
        if prepared is None or self.fault == FAULT_WITHHOLD:
            body = bytes.fromhex(rec.tx_id) + b"no share"
            record = sign_record(self.identity, Kind.SHARE_REFUSAL, self.trustee_id, _AGGREGATOR_ID, body)
            self.bus.send(self.name, AGGREGATOR, record)
            return None
        if self.fault == FAULT_GARBAGE:
            prepared = PreparedShare(prepared.epoch, prepared.generation, self._garbage(rec, prepared.share))
        self.released.add(rec.tx_id)
        return self._send(AGGREGATOR, _AGGREGATOR_ID, Kind.SHARE_RELEASE, rec.tx_id, prepared)

    def _garbage(self, rec: TxRecord, share: bytes) -> bytes:
        real = decode_share(rec.tx.protocol, share)
        junk = GroupElement.random(self.rng)
        if rec.tx.protocol is Protocol.TDH2:
            return tdh2.Tdh2Share(real.index, junk, real.e_i, real.f_i).to_bytes()
        return pvss.PvssDecShare(real.index, junk, real.proof).to_bytes()

    def _send(self, to: str, to_id: int, kind: Kind, tx_id: str, prepared: PreparedShare) -> Record:
        body = ShareRelease(tx_id, prepared.epoch, prepared.generation, prepared.share).to_bytes()
        record = sign_record(self.identity, kind, self.trustee_id, to_id, body)
        self.bus.send(self.name, to, record)
        return record

    def reprepare(self, epoch: int) -> int:
        """Recompute cached shares after a reshare changed this trustee's key share."""
        count = 0
        for tx_id, prepared in list(self.pending.items()):
            rec = self.chain.txs[tx_id]
            if prepared.epoch == epoch and rec.tx.protocol is Protocol.TDH2 and rec.state < TxState.FINALIZED:
                fresh, _ = self._prepare(rec)
                if fresh is None:
                    del self.pending[tx_id]
                else:
                    self.pending[tx_id] = fresh
                count += 1
        # txs this trustee could not serve before (e.g. it just joined) get a share now
        for tx_id in list(self.refused):
            rec = self.chain.txs[tx_id]
            if rec.tx.epoch == epoch and rec.state < TxState.FINALIZED:
                fresh, _ = self._prepare(rec)
                if fresh is not None:
                    self.refused.discard(tx_id)
                    self.pending[tx_id] = fresh
                    count += 1
        return count

    def __repr__(self) -> str:
        return f"Trustee({self.name!r}, fault={self.fault!r})"


# -- reconstruction ------------------------------------------------------------

@dataclass
class ReconstructionItem:
    """Material for one tx: parsed ``c_k`` and candidate shares with their public keys."""

    tx_id: str
    c_k: Union[tdh2.Tdh2Ciphertext, pvss.PvssDeal]
    shares: List[Tuple[Share, GroupElement]]


@dataclass
class ReconstructionBatch:
    items: List[ReconstructionItem]
    threshold: int

    @property
    def tx_ids(self) -> List[str]:
        return [it.tx_id for it in self.items]

    @property
    def shares(self) -> Dict[str, List[Share]]:
        return {it.tx_id: [s for s, _ in it.shares] for it in self.items}

    @property
    def size(self) -> int:
        return len(self.items)


@dataclass
class BatchResult:
    keys: Dict[str, aead.SymmetricKey]
    unreconstructable: Dict[str, str]
    used_shares: Dict[str, List[Share]]
    compute_wall_ms: float = 0.0

    @property
    def size(self) -> int:
        return len(self.keys) + len(self.unreconstructable)


def _share_valid(protocol: Protocol, c_k, share: Share, key: GroupElement) -> bool:
    if protocol is Protocol.TDH2:
        return isinstance(share, tdh2.Tdh2Share) and tdh2.verify_share(c_k, share, key)
    if not isinstance(share, pvss.PvssDecShare):
        return False
    try:
        s_hat = c_k.share(share.index).s_hat
    except DomainError:
        return False
    return pvss.verify_dec_share(key, s_hat, share)


def reconstruct_one(item: ReconstructionItem, protocol: Protocol, t: int):
    """Verify shares until ``t`` are valid, then interpolate.  Returns (key, shares) or (None, reason)."""
    valid: List[Share] = []
    seen: Set[int] = set()
    for share, key in item.shares:
        if share.index in seen:
            continue
        if _share_valid(protocol, item.c_k, share, key):
            valid.append(share)
            seen.add(share.index)
            if len(valid) == t:
                break
    if len(valid) < t:
        return None, f"only {len(valid)} valid shares, need {t}"
    if protocol is Protocol.TDH2:
        point = tdh2.combine(item.c_k, valid, t)
    else:
        point = pvss.reconstruct(valid, t)
    return aead.derive_key(point), valid


def _reconstruct_chunk(items, protocol, t):
    return [(it.tx_id, *reconstruct_one(it, protocol, t)) for it in items]


def reconstruct_keys(
    batch: ReconstructionBatch,
    protocol: Union[Protocol, str],
    *,
    executor: Optional[concurrent.futures.Executor] = None,
    workers: int = 1,
) -> BatchResult:
    """Rebuild every key in ``batch``; txs short of ``t`` valid shares are reported, not fatal.

    With an executor, txs are verified in parallel chunks; results are
    merged in tx_id order so the output never depends on scheduling.
    """
    protocol = Protocol.parse(protocol)
    t = batch.threshold
    t0 = time.perf_counter()
    if executor is None or workers <= 1 or batch.size < 2:
        rows = _reconstruct_chunk(batch.items, protocol, t)
    else:
        step = -(-batch.size // workers)
        chunks = [batch.items[i : i + step] for i in range(0, batch.size, step)]
        rows = []
        for part in executor.map(_reconstruct_chunk, chunks, [protocol] * len(chunks), [t] * len(chunks)):
            rows.extend(part)
    wall = (time.perf_counter() - t0) * 1000.0
    result = BatchResult({}, {}, {}, wall)
    for tx_id, key, extra in sorted(rows, key=lambda r: r[0]):
        if key is None:
            result.unreconstructable[tx_id] = extra
        else:
            result.keys[tx_id] = key
            result.used_shares[tx_id] = extra
    return result


# -- consensus side ------------------------------------------------------------

def _share_key(chain: Chain, rec: TxRecord, generation: int, index: int) -> Optional[GroupElement]:
    """Public key a share for ``rec`` must verify against."""
    tx = rec.tx
    try:
        if tx.protocol is Protocol.TDH2:
            return chain.verification_key(tx.epoch, generation, index)
        return chain.rosters[tx.epoch][0][index - 1]
    except (KeyError, IndexError):
        return None


def _parse_c_k(tx):
    if tx.protocol is Protocol.TDH2:
        return tdh2.Tdh2Ciphertext.from_bytes(tx.c_k)
    return pvss.PvssDeal.from_bytes(tx.c_k)


class Aggregator:
    """Designated consensus node collecting released shares and rebuilding keys."""

    def __init__(self, chain: Chain, bus: Bus, threshold: int, *, executor=None, workers: int = 1):
        self.chain = chain
        self.bus = bus
        self.threshold = threshold
        self.trustee_keys: Dict[int, bytes] = {}
        self.inbox: Dict[str, Dict[int, ShareRelease]] = {}
        self.refusals: Dict[str, Set[int]] = {}
        self.rejected_records = 0
        self.batches: List[BatchResult] = []
        self.executor = executor
        self.workers = workers
        self._arrived: Set[str] = set()
        self._flush_scheduled = False
        self._done: Set[str] = set()
        bus.register(AGGREGATOR, self.on_record)

    def register_trustee(self, trustee: Trustee) -> None:
        self.trustee_keys[trustee.trustee_id] = trustee.identity.public_key

    def on_record(self, _sender: str, record: Record) -> None:
        pub = self.trustee_keys.get(record.sender)
        body = open_record(record, pub) if pub is not None else None
        if body is None:
            self.rejected_records += 1
            return
        if record.kind is Kind.SHARE_REFUSAL:
            self.refusals.setdefault(body[:16].hex(), set()).add(record.sender)
        elif record.kind is Kind.SHARE_RELEASE:
            try:
                rel = ShareRelease.from_bytes(body)
            except DecodeError:
                self.rejected_records += 1
                return
            self.inbox.setdefault(rel.tx_id, {}).setdefault(record.sender, rel)
            self._arrived.add(rel.tx_id)
        if not self._flush_scheduled:
            # everything delivered in this instant joins one batch
            self._flush_scheduled = True
            self.chain.loop.schedule(self.chain.loop.now_ms, self._flush)

    def _flush(self) -> None:
        self._flush_scheduled = False
        ready = sorted(self._arrived)
        self._arrived.clear()
        items = []
        for tx_id in ready:
            rec = self.chain.txs.get(tx_id)
            if rec is None or tx_id in self._done:
                continue
            if rec.state < TxState.FINALIZED:
                # never interpolate for a tx that is not final
                continue
            try:
                c_k = _parse_c_k(rec.tx)
            except DecodeError:
                continue
            by_gen: Dict[int, List[Tuple[Share, GroupElement]]] = {}
            for trustee_id in sorted(self.inbox[tx_id]):
                rel = self.inbox[tx_id][trustee_id]
                try:
                    share = decode_share(rec.tx.protocol, rel.share)
                except DecodeError:
                    continue
                key = _share_key(self.chain, rec, rel.generation, share.index)
                if key is not None:
                    by_gen.setdefault(rel.generation, []).append((share, key))
            if not by_gen:
                continue
            gen = max(by_gen, key=lambda g: (len(by_gen[g]), g))
            items.append((rec, gen, ReconstructionItem(tx_id, c_k, by_gen[gen])))
        if not items:
            return
        by_proto: Dict[Protocol, List] = {}
        for entry in items:
            by_proto.setdefault(entry[0].tx.protocol, []).append(entry)
        entries = []
        for proto, group in sorted(by_proto.items()):
            batch = ReconstructionBatch([it for _, _, it in group], self.threshold)
            result = reconstruct_keys(batch, proto, executor=self.executor, workers=self.workers)
            self.batches.append(result)
            now, height = self.chain.loop.now_ms, self.chain.height
            self.chain.trace.emit(
                None, "batch_reconstructed", now, height,
                size=batch.size, protocol=proto.name, reconstruct_wall_ms=result.compute_wall_ms,
            )
            for rec, gen, item in group:
                tx_id = rec.tx_id
                if tx_id in result.unreconstructable:
                    # trustees all release in the finality instant, so nothing more is coming
                    self._done.add(tx_id)
                    self.chain.fail_unreconstructable(tx_id, result.unreconstructable[tx_id])
                    continue
                self._done.add(tx_id)
                key = result.keys[tx_id]
                attach = rec.tx.h_k is None or aead.key_hash(key) != rec.tx.h_k
                shares = [s.to_bytes() for s in result.used_shares[tx_id]] if attach else []
                entries.append(
                    bytes.fromhex(tx_id) + gen.to_bytes(4, "big") + key.key + pack_list(shares)
                )
        if entries:
            record = Record(Kind.KEY_PROPAGATION, _AGGREGATOR_ID, _CONSENSUS_ID, pack_list(entries))
            self.bus.send(AGGREGATOR, CONSENSUS, record)


class ConsensusGroup:
    """Followers applying propagated keys; ``h_k`` lets them skip share checks."""

    def __init__(self, chain: Chain, bus: Bus, threshold: int):
        self.chain = chain
        self.threshold = threshold
        self.fast_path = 0
        self.full_path = 0
        bus.register(CONSENSUS, self.on_record)

    def on_record(self, _sender: str, record: Record) -> None:
        if record.kind is not Kind.KEY_PROPAGATION:
            return
        for entry in unpack_list(record.payload):
            tx_id = entry[:16].hex()
            gen = int.from_bytes(entry[16:20], "big")
            key = aead.SymmetricKey(entry[20:52])
            shares = unpack_list(entry[52:])
            self._apply(tx_id, gen, key, shares)

    def _apply(self, tx_id: str, gen: int, key: aead.SymmetricKey, raw_shares: List[bytes]) -> None:
        rec = self.chain.txs.get(tx_id)
        if rec is None or rec.state not in (TxState.FINALIZED, TxState.REVEALED):
            return
        t0 = time.perf_counter()
        if rec.tx.h_k is not None and aead.key_hash(key) == rec.tx.h_k:
            path = "hk"
            self.fast_path += 1
        else:
            path = "shares"
            self.full_path += 1
            item = ReconstructionItem(tx_id, _parse_c_k(rec.tx), [])
            for raw in raw_shares:
                share = decode_share(rec.tx.protocol, raw)
                pub = _share_key(self.chain, rec, gen, share.index)
                if pub is not None:
                    item.shares.append((share, pub))
            rebuilt, _ = reconstruct_one(item, rec.tx.protocol, self.threshold)
            if rebuilt is None:
                self.chain.fail_unreconstructable(tx_id, "propagated shares invalid")
                return
            key = rebuilt
        check_ms = (time.perf_counter() - t0) * 1000.0
        self.chain.trace.emit(
            tx_id, "key_checked", self.chain.loop.now_ms, self.chain.height, path=path, check_wall_ms=check_ms
        )
        try:
            self.chain.reveal_and_execute(tx_id, key, path=path)
        except KeyRejectedError:
            pass


# -- monitoring ------------------------------------------------------------------

class ConfidentialityMonitor:
    """Bus tap flagging any tx whose valid shares reach ``t`` before it finalizes."""

    def __init__(self, chain: Chain, threshold: int, *, verify: bool = True):
        self.chain = chain
        self.threshold = threshold
        self.verify = verify
        self.seen: Dict[str, Set[int]] = {}
        self.violations: List[Tuple[str, float, int]] = []
        self.early_shares = 0

    def __call__(self, _sender: str, _recipient: str, record: Record, now: float) -> None:
        if record.kind is not Kind.SHARE_RELEASE:
            return
        try:
            rel = ShareRelease.from_bytes(record.payload[:-64])
        except DecodeError:
            return
        rec = self.chain.txs.get(rel.tx_id)
        if rec is None:
            return
        try:
            share = decode_share(rec.tx.protocol, rel.share)
        except DecodeError:
            return
        if self.verify:
            pub = _share_key(self.chain, rec, rel.generation, share.index)
            if pub is None or not _share_valid(rec.tx.protocol, _parse_c_k(rec.tx), share, pub):
                return
        got = self.seen.setdefault(rel.tx_id, set())
        got.add(share.index)
        if rec.state < TxState.FINALIZED:
            self.early_shares += 1
            if len(got) >= self.threshold:
                self.violations.append((rel.tx_id, now, len(got)))


class Adversary:
    """Collects leaked shares; tries to decrypt and may blow the whistle."""

    def __init__(self, chain: Chain, bus: Bus, threshold: int):
        self.chain = chain
        self.threshold = threshold
        self.leaks: Dict[str, Dict[int, ShareRelease]] = {}
        self.decrypted: Dict[str, float] = {}
        bus.register(ADVERSARY, self.on_record)

    def on_record(self, _sender: str, record: Record) -> None:
        try:
            rel = ShareRelease.from_bytes(record.payload[:-64])
        except DecodeError:
            return
        self.leaks.setdefault(rel.tx_id, {})[record.sender] = rel
        rec = self.chain.txs.get(rel.tx_id)
        if rec is not None and len(self.leaks[rel.tx_id]) >= self.threshold and rel.tx_id not in self.decrypted:
            item = ReconstructionItem(rel.tx_id, _parse_c_k(rec.tx), [])
            for r in self.leaks[rel.tx_id].values():
                share = decode_share(rec.tx.protocol, r.share)
                pub = _share_key(self.chain, rec, r.generation, share.index)
                if pub is not None:
                    item.shares.append((share, pub))
            key, _ = reconstruct_one(item, rec.tx.protocol, self.threshold)
            if key is not None:
                self.decrypted[rel.tx_id] = self.chain.loop.now_ms

    def evidence(self, tx_id: str) -> List[Share]:
        rec = self.chain.txs[tx_id]
        return [decode_share(rec.tx.protocol, r.share) for r in self.leaks.get(tx_id, {}).values()]


# -- committee -------------------------------------------------------------------

@dataclass
class ReshareEvent:
    epoch: int
    generation: int
    started_ms: float
    completed_ms: Optional[float] = None
    aborted: Optional[str] = None
    stats: Optional[dkg.ProtocolStats] = None


class Committee:
    """Wires trustees, aggregator and consensus followers to a chain."""

    def __init__(
        self,
        chain: Chain,
        bus: Bus,
        protocol: Union[Protocol, str],
        n: int,
        t: Optional[int] = None,
        rng: Optional[random.Random] = None,
        *,
        faults: Optional[Mapping[int, str]] = None,
        keygen: str = "dkg",
        executor=None,
        workers: int = 1,
        monitor: bool = True,
        collateral_owner: Optional[str] = None,
    ):
        self.chain = chain
        self.bus = bus
        self.protocol = Protocol.parse(protocol)
        self.n = n
        self.t = t if t is not None else n // 2 + 1
        if not 1 <= self.t <= n:
            raise DomainError(f"need 1 <= t <= n, got t={self.t}, n={n}")
        self.rng = rng if rng is not None else random.SystemRandom()
        self.faults = dict(faults or {})
        self.keygen = keygen
        self.trustees: Dict[str, Trustee] = {}
        self.reshares: List[ReshareEvent] = []
        self.dkg_outputs: Dict[int, dkg.DkgOutput] = {}
        self.aggregator = Aggregator(chain, bus, self.t, executor=executor, workers=workers)
        self.consensus = ConsensusGroup(chain, bus, self.t)
        self.adversary = Adversary(chain, bus, self.t)
        self.monitor = ConfidentialityMonitor(chain, self.t) if monitor else None
        if self.monitor is not None:
            bus.taps.append(self.monitor)
        names = dkg.default_roster(n)
        for i, name in enumerate(names, start=1):
            self._add_trustee(name, self.faults.get(i))
        if self.protocol is Protocol.TDH2:
            self.epoch = 1
            self._install_epoch(self.epoch, names)
        else:
            self.epoch = self._rotate_roster(names)
        if collateral_owner is not None:
            for i in range(1, n + 1):
                chain.stake_collateral(i, collateral_owner)
        chain.on_included(self._on_included)
        chain.on_finalized(self._on_finalized)

    def _add_trustee(self, name: str, fault: Optional[str]) -> Trustee:
        tid = len(self.trustees) + 1
        ident = Identity.generate(name, self.rng)
        tr = Trustee(tid, ident, self.chain, self.bus, fault=fault, rng=random.Random(self.rng.getrandbits(64)))
        self.trustees[name] = tr
        self.aggregator.register_trustee(tr)
        return tr

    def _keygen(self, epoch: int, names: Sequence[str]) -> dkg.DkgOutput:
        crashed = {i: "crash" for i, name in enumerate(names, 1) if self.trustees[name].crashed}
        if self.keygen == "dealer":
            return dkg.dealer_keygen(len(names), self.t, self.rng, epoch=epoch, roster=names)
        return dkg.run_dkg(
            len(names), self.t, self.rng, epoch=epoch, roster=names, faults=crashed, hop_delay_ms=self.bus.delay_ms
        )

    def _install_epoch(self, epoch: int, names: Sequence[str]) -> dkg.DkgOutput:
        out = self._keygen(epoch, names)
        self.dkg_outputs[epoch] = out
        for i, name in enumerate(names, start=1):
            if i in out.secret_shares:
                self.trustees[name].install_share(epoch, 0, i, out.secret_shares[i])
        self.chain.publish_epoch_key(epoch, out.public_key)
        return out

    def _rotate_roster(self, names: Sequence[str]) -> int:
        keys = [self.trustees[name].new_pvss_key() for name in names]
        roster_epoch = self.chain.publish_roster([pk for _, pk in keys], self.t)
        for i, (name, (sk, _)) in enumerate(zip(names, keys), start=1):
            self.trustees[name].install_pvss_key(roster_epoch, i, sk)
        return roster_epoch

    @property
    def public_key(self) -> tdh2.Tdh2PublicKey:
        return self.chain.epoch_public_key(self.epoch)

    def trustee(self, index: int) -> Trustee:
        """Trustee holding share ``index`` in the current epoch."""
        for tr in self.trustees.values():
            keys = tr.key_shares if self.protocol is Protocol.TDH2 else tr.pvss_keys
            ks = keys.get(self.epoch)
            if ks is not None and ks.index == index:
                return tr
        raise KeyError(index)

    def _on_included(self, rec: TxRecord) -> None:
        for tr in self.trustees.values():
            if tr.serves(rec):
                tr.on_tx_included(rec)

    def _on_finalized(self, rec: TxRecord) -> None:
        released = 0
        for tr in self.trustees.values():
            if tr.serves(rec) and tr.on_tx_finalized(rec) is not None:
                released += 1
        if released >= self.t:
            self.chain.mark_revealed(rec.tx_id)


def epoch_tick(
    committee: Committee,
    action: str = "reshare",
    *,
    new_roster: Optional[Sequence[str]] = None,
    t_new: Optional[int] = None,
    faults: Optional[Mapping[int, str]] = None,
) -> Optional[ReshareEvent]:
    """Run a scheduled committee transition.

    ``reshare`` refreshes the shares of the current epoch key (optionally
    handing over to ``new_roster``); the new shares take effect once the
    protocol's bus rounds have elapsed in simulated time.  ``rotate`` starts
    a new epoch with a fresh key, keeping the old key acceptable for the
    chain's grace window.  Aborts extend the current epoch and raise an
    alarm in the trace.
    """
    chain = committee.chain
    trace = chain.trace
    now = chain.loop.now_ms
    if committee.protocol is Protocol.PVSS:
        names = list(new_roster) if new_roster is not None else list(dkg.default_roster(committee.n))
        for name in names:
            if name not in committee.trustees:
                committee._add_trustee(name, None)
        committee.epoch = committee._rotate_roster(names)
        trace.emit(None, "roster_rotated", now, chain.height, roster_epoch=committee.epoch)
        return None
    if action == "rotate":
        names = list(new_roster) if new_roster is not None else list(committee.dkg_outputs[committee.epoch].roster)
        for name in names:
            if name not in committee.trustees:
                committee._add_trustee(name, None)
        try:
            committee._install_epoch(committee.epoch + 1, names)
        except AbortError as exc:
            trace.emit(None, "alarm", now, chain.height, reason=f"key rotation aborted: {exc}")
            return None
        committee.epoch += 1
        return None
    if action != "reshare":
        raise DomainError(f"unknown epoch action {action!r}")

    epoch = committee.epoch
    old = committee.dkg_outputs[epoch]
    names = tuple(new_roster) if new_roster is not None else old.roster
    t_new = t_new if t_new is not None else committee.t
    live = [i for i, name in enumerate(old.roster, 1) if not committee.trustees[name].crashed]
    event = ReshareEvent(epoch, old.generation + 1, now)
    committee.reshares.append(event)
    try:
        out = dkg.reshare(
            old, names, t_new, committee.rng, live=live, faults=faults, hop_delay_ms=committee.bus.delay_ms
        )
    except AbortError as exc:
        event.aborted = str(exc)
        trace.emit(None, "alarm", now, chain.height, reason=f"reshare aborted, epoch {epoch} extended: {exc}")
        return event
    event.stats = out.stats
    trace.emit(None, "reshare_started", now, chain.height, epoch=epoch, generation=out.generation)
    chain.loop.schedule_in(out.stats.network_ms, _complete_reshare, committee, event, out)
    return event


def _complete_reshare(committee: Committee, event: ReshareEvent, out: dkg.DkgOutput) -> None:
    chain = committee.chain
    epoch = event.epoch
    old = committee.dkg_outputs[epoch]
    for name in out.roster:
        if name not in committee.trustees:
            committee._add_trustee(name, None)
    for name in old.roster:
        if name not in out.roster:
            committee.trustees[name].retire(epoch)
    for i, name in enumerate(out.roster, start=1):
        if i in out.secret_shares:
            committee.trustees[name].install_share(epoch, out.generation, i, out.secret_shares[i])
    committee.dkg_outputs[epoch] = out
    committee.t = out.threshold
    committee.aggregator.threshold = out.threshold
    committee.consensus.threshold = out.threshold
    chain.publish_verification_keys(epoch, out.generation, out.public_key.verification_keys)
    for name in out.roster:
        committee.trustees[name].reprepare(epoch)
    event.completed_ms = chain.loop.now_ms
    chain.trace.emit(
        None, "reshare_completed", chain.loop.now_ms, chain.height, epoch=epoch, generation=out.generation
    )
