"""Simulated ledger: blocks, encrypted write transactions and their lifecycle.

Block ``h`` is produced at simulated time ``h * block_time_ms``.  A tx
included at height ``n`` finalizes when block ``n + m`` is produced.
Fee units are integers; the ledger tracks every unit so that balances,
escrow and burned amounts always sum to what was minted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .. import aead, pvss, tdh2
from ..errors import (
    DecodeError,
    KeyRejectedError,
    OrderingError,
    Rejection,
    StaleDealError,
    StaleKeyError,
)
from ..group import GroupElement, Label
from .loop import EventLoop, Trace
from .tx import InnerTx, Protocol, WriteTx


def _exact(x) -> Fraction:
    # str() keeps 0.1 as one tenth instead of its binary expansion
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def collateral_check(c, a, t, max_extractable) -> bool:
    """True iff slashing t colluders costs more than the extractable value."""
    c, a, t, mx = _exact(c), _exact(a), _exact(t), _exact(max_extractable)
    if c < 0 or a < 0 or t < 0:
        raise ValueError("c, a and t must be non-negative")
    return mx < (1 + a) * c * t


@dataclass
class ChainConfig:
    block_time_ms: float = 12_000
    confirmations: int = 64
    label: Label = b"frontseal-genesis"
    storage_deposit_per_byte: int = 1
    refund_fraction: Fraction = Fraction(9, 10)
    key_write_deadline_blocks: int = 4
    block_capacity: Optional[int] = None
    execution_fee: int = 1
    grace_blocks: int = 32
    collateral: int = 1000
    dispute_stake: Optional[int] = None

    def __post_init__(self):
        self.refund_fraction = _exact(self.refund_fraction)
        if self.confirmations < 1:
            raise ValueError("confirmations must be at least 1")
        if self.block_time_ms <= 0:
            raise ValueError("block time must be positive")
        if not 0 <= self.refund_fraction <= 1:
            raise ValueError("refund_fraction must lie in [0, 1]")
        if self.key_write_deadline_blocks < 1:
            raise ValueError("key write deadline must be at least one block")
        if self.block_capacity is not None and self.block_capacity < 1:
            raise ValueError("block capacity must be positive")
        if not self.label:
            raise ValueError("label must be non-empty")

    @property
    def plaintiff_stake(self) -> int:
        return self.collateral if self.dispute_stake is None else self.dispute_stake

    @property
    def finality_ms(self) -> float:
        return self.confirmations * self.block_time_ms


class TxState(enum.IntEnum):
    PENDING = 0
    INCLUDED = 1
    FINALIZED = 2
    REVEALED = 3
    EXECUTED = 4
    FAILED = 5


@dataclass
class TxRecord:
    tx: WriteTx
    state: TxState = TxState.PENDING
    inclusion_height: Optional[int] = None
    timestamps: Dict[str, float] = field(default_factory=dict)
    key: Optional[aead.SymmetricKey] = None
    key_height: Optional[int] = None
    result: Optional[str] = None
    failure: Optional[str] = None

    @property
    def tx_id(self) -> str:
        return self.tx.tx_id


@dataclass(frozen=True)
class Receipt:
    tx_id: str
    deposit: int
    fee: int
    submitted_ms: float


@dataclass(frozen=True)
class Block:
    height: int
    time_ms: float
    tx_ids: Tuple[str, ...]
    key_records: Tuple[Tuple[str, bytes], ...]


@dataclass(frozen=True)
class ExecutionResult:
    tx_id: str
    state: TxState
    result: Optional[str]
    refund: int
    plaintext: Optional[InnerTx] = None


@dataclass(frozen=True)
class Verdict:
    slashed: bool
    trustee_index: Optional[int]
    reason: str


@dataclass
class EpochKeys:
    epoch: int
    public_key: tdh2.Tdh2PublicKey
    start_height: int
    # verification keys per resharing generation; the public key never changes
    generations: Dict[int, Tuple[GroupElement, ...]] = field(default_factory=dict)
    expires_height: Optional[int] = None


Evidence = Union[tdh2.Tdh2Share, pvss.PvssDecShare]
Listener = Callable[[TxRecord], None]

VALIDATOR_ACCOUNT = "validators"
_ORDER = (TxState.PENDING, TxState.INCLUDED, TxState.FINALIZED, TxState.REVEALED, TxState.EXECUTED)


class Chain:
    def __init__(self, config: ChainConfig, loop: Optional[EventLoop] = None, trace: Optional[Trace] = None):
        self.config = config
        self.loop = loop or EventLoop()
        self.trace = trace if trace is not None else Trace()
        self.height = 0
        self.blocks: List[Block] = []
        self.txs: Dict[str, TxRecord] = {}
        self.mempool: List[str] = []
        self.balances: Dict[str, int] = {}
        self.nonces: Dict[str, int] = {}
        self.escrow: Dict[str, int] = {}
        self.collateral: Dict[int, int] = {}
        self.burned = 0
        self.minted = 0
        self.epochs: Dict[int, EpochKeys] = {}
        self.current_epoch: Optional[int] = None
        self.rosters: Dict[int, Tuple[Tuple[GroupElement, ...], int]] = {}
        self.roster_epoch = 0
        self.deadline_misses: List[str] = []
        self._pending_keys: List[Tuple[str, bytes]] = []
        self._include_listeners: List[Listener] = []
        self._final_listeners: List[Listener] = []
        self._by_inclusion: Dict[int, List[str]] = {}
        self._producing = False

    # -- accounts ----------------------------------------------------------
    def mint(self, address: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("amount must be non-negative")
        self.balances[address] = self.balances.get(address, 0) + amount
        self.minted += amount

    def balance(self, address: str) -> int:
        return self.balances.get(address, 0)

    def _debit(self, address: str, amount: int) -> None:
        if self.balances.get(address, 0) < amount:
            raise Rejection("insufficient balance")
        self.balances[address] -= amount

    def _credit(self, address: str, amount: int) -> None:
        self.balances[address] = self.balances.get(address, 0) + amount

    def total_accounted(self) -> int:
        return (
            sum(self.balances.values())
            + sum(self.escrow.values())
            + sum(self.collateral.values())
            + self.burned
        )

    def check_conservation(self) -> bool:
        return self.total_accounted() == self.minted

    def stake_collateral(self, trustee_index: int, owner: str, amount: Optional[int] = None) -> None:
        amount = self.config.collateral if amount is None else amount
        self._debit(owner, amount)
        self.collateral[trustee_index] = self.collateral.get(trustee_index, 0) + amount

    # -- keys and rosters --------------------------------------------------
    def publish_epoch_key(self, epoch: int, public_key: tdh2.Tdh2PublicKey, generation: int = 0) -> None:
        """Install a new epoch key; the previous one stays valid for the grace window."""
        if self.current_epoch is not None:
            if epoch <= self.current_epoch:
                raise ValueError("epochs must increase")
            self.epochs[self.current_epoch].expires_height = self.height + self.config.grace_blocks
        ek = EpochKeys(epoch, public_key, self.height)
        ek.generations[generation] = public_key.verification_keys
        self.epochs[epoch] = ek
        self.current_epoch = epoch
        self._emit(None, "epoch_key_published", epoch=epoch, generation=generation)

    def publish_verification_keys(self, epoch: int, generation: int, keys: Sequence[GroupElement]) -> None:
        self.epochs[epoch].generations[generation] = tuple(keys)
        self._emit(None, "verification_keys_published", epoch=epoch, generation=generation)

    def epoch_public_key(self, epoch: Optional[int] = None) -> tdh2.Tdh2PublicKey:
        epoch = self.current_epoch if epoch is None else epoch
        if epoch is None or epoch not in self.epochs:
            raise StaleKeyError(f"no key for epoch {epoch}")
        return self.epochs[epoch].public_key

    def verification_key(self, epoch: int, generation: int, index: int) -> GroupElement:
        return self.epochs[epoch].generations[generation][index - 1]

    def publish_roster(self, trustee_pks: Sequence[GroupElement], threshold: int) -> int:
        """Register PVSS trustee encryption keys; returns the new roster epoch."""
        self.roster_epoch += 1
        self.rosters[self.roster_epoch] = (tuple(trustee_pks), threshold)
        self._emit(None, "roster_published", roster_epoch=self.roster_epoch, n=len(trustee_pks))
        return self.roster_epoch

    @property
    def roster(self) -> Tuple[GroupElement, ...]:
        return self.rosters[self.roster_epoch][0] if self.roster_epoch else ()

    def _check_epoch(self, tx: WriteTx) -> None:
        if tx.protocol is Protocol.PVSS:
            if tx.epoch != self.roster_epoch:
                raise StaleDealError(f"deal built for roster epoch {tx.epoch}, current is {self.roster_epoch}")
            return
        ek = self.epochs.get(tx.epoch)
        if ek is None:
            raise StaleKeyError(f"unknown epoch {tx.epoch}")
        if ek.expires_height is not None and self.height > ek.expires_height:
            raise StaleKeyError(f"epoch {tx.epoch} key expired at height {ek.expires_height}")

    # -- submission --------------------------------------------------------
    def submit_tx(self, tx: Union[WriteTx, bytes]) -> Receipt:
        """Validate an envelope, escrow its deposit and queue it in the mempool."""
        if isinstance(tx, (bytes, bytearray)):
            try:
                tx = WriteTx.from_bytes(bytes(tx))
            except DecodeError as exc:
                raise Rejection(f"malformed envelope: {exc}") from None
        if not tx.verify_signature():
            raise Rejection("bad envelope signature")
        self._check_epoch(tx)
        try:
            if tx.protocol is Protocol.TDH2:
                tdh2.Tdh2Ciphertext.from_bytes(tx.c_k)
            else:
                deal = pvss.PvssDeal.from_bytes(tx.c_k)
                pks, threshold = self.rosters[tx.epoch]
                if deal.n != len(pks) or deal.threshold != threshold:
                    raise DecodeError("deal does not match the published roster")
        except DecodeError as exc:
            raise Rejection(f"malformed c_k: {exc}") from None
        required = self.config.storage_deposit_per_byte * tx.size
        if tx.deposit_paid != required:
            raise Rejection(f"deposit {tx.deposit_paid} does not match required {required}")
        tx_id = tx.tx_id
        if tx_id in self.txs:
            raise Rejection("duplicate envelope")
        fee = self.config.execution_fee
        payer = tx.sender_address
        if self.balance(payer) < required + fee:
            raise Rejection("insufficient balance")
        self._debit(payer, required + fee)
        self._credit(VALIDATOR_ACCOUNT, fee)
        self.escrow[tx_id] = required
        rec = TxRecord(tx)
        rec.timestamps["pending"] = self.loop.now_ms
        self.txs[tx_id] = rec
        self.mempool.append(tx_id)
        self._emit(tx_id, "submitted", deposit=required, size=tx.size, protocol=tx.protocol.name)
        return Receipt(tx_id, required, fee, self.loop.now_ms)

    def observe_mempool(self) -> List[bytes]:
        """What an outside observer sees: serialized envelopes, all payloads encrypted."""
        return [self.txs[i].tx.to_bytes() for i in self.mempool]

    # -- listeners ---------------------------------------------------------
    def on_included(self, fn: Listener) -> None:
        self._include_listeners.append(fn)

    def on_finalized(self, fn: Listener) -> None:
        self._final_listeners.append(fn)

    # -- block production ---------------------------------------------------
    def start(self, until_height: Optional[int] = None) -> None:
        """Schedule block production on the event loop."""
        self._until = until_height
        if not self._producing:
            self._producing = True
            self.loop.schedule((self.height + 1) * self.config.block_time_ms, self._produce)

    def _produce(self) -> None:
        self.advance_block()
        if self._until is None or self.height < self._until:
            self.loop.schedule((self.height + 1) * self.config.block_time_ms, self._produce)
        else:
            self._producing = False

    def advance_block(self) -> Block:
        """Produce the next block at its scheduled time."""
        target = float((self.height + 1) * self.config.block_time_ms)
        if self.loop.now_ms > target:
            raise OrderingError("simulated clock is ahead of the block schedule")
        self.loop.now_ms = target
        self.height += 1
        cap = self.config.block_capacity
        take = self.mempool if cap is None else self.mempool[:cap]
        included = list(take)
        del self.mempool[: len(included)]
        keys = self._write_keys()
        block = Block(self.height, target, tuple(included), tuple(keys))
        self.blocks.append(block)
        self._emit(None, "block", tx_count=len(included), keys=len(keys))
        for tx_id in included:
            rec = self.txs[tx_id]
            self._advance(rec, TxState.INCLUDED)
            rec.inclusion_height = self.height
            self._by_inclusion.setdefault(self.height, []).append(tx_id)
            for fn in self._include_listeners:
                fn(rec)
        for tx_id in self._by_inclusion.pop(self.height - self.config.confirmations, []):
            rec = self.txs[tx_id]
            self._advance(rec, TxState.FINALIZED)
            for fn in self._final_listeners:
                fn(rec)
        return block

    def _write_keys(self) -> List[Tuple[str, bytes]]:
        keys, self._pending_keys = self._pending_keys, []
        for tx_id, key in keys:
            rec = self.txs[tx_id]
            rec.key_height = self.height
            deadline = rec.inclusion_height + self.config.confirmations + self.config.key_write_deadline_blocks
            self._emit(tx_id, "key_recorded", deadline=deadline)
            if self.height > deadline:
                self.deadline_misses.append(tx_id)
                self._emit(tx_id, "key_deadline_missed", deadline=deadline)
        return keys

    # -- lifecycle ---------------------------------------------------------
    def _advance(self, rec: TxRecord, state: TxState, **extra) -> None:
        if state is TxState.FAILED:
            if rec.state in (TxState.EXECUTED, TxState.FAILED):
                raise OrderingError(f"{rec.tx_id} already terminal")
        elif state is not TxState.FAILED and _ORDER.index(state) != _ORDER.index(rec.state) + 1:
            raise OrderingError(f"{rec.tx_id}: {rec.state.name} -> {state.name}")
        rec.state = state
        rec.timestamps[state.name.lower()] = self.loop.now_ms
        self._emit(rec.tx_id, state.name.lower(), **extra)

    def mark_revealed(self, tx_id: str) -> None:
        """Shares for a finalized tx have been released."""
        rec = self._get(tx_id)
        if rec.state < TxState.FINALIZED:
            raise OrderingError(f"{tx_id} is not finalized")
        if rec.state is TxState.FINALIZED:
            self._advance(rec, TxState.REVEALED)

    def reveal_and_execute(self, tx_id: str, key: aead.SymmetricKey, path: str = "shares") -> ExecutionResult:
        rec = self._get(tx_id)
        if rec.state < TxState.FINALIZED:
            raise OrderingError(f"{tx_id} is not finalized")
        if rec.state in (TxState.EXECUTED, TxState.FAILED):
            raise OrderingError(f"{tx_id} already has a recorded outcome")
        if rec.state is TxState.FINALIZED:
            self._advance(rec, TxState.REVEALED)
        if rec.tx.h_k is not None and aead.key_hash(key) != rec.tx.h_k:
            self._fail(rec, "h_k mismatch")
            raise KeyRejectedError(f"{tx_id}: revealed key does not match h_k")
        try:
            plaintext = aead.open(key, rec.tx.c_tx)
        except Exception:
            self._fail(rec, "auth")
            return ExecutionResult(tx_id, rec.state, "auth", 0)
        self._emit(tx_id, "plaintext_exposed", path=path)
        try:
            inner = InnerTx.from_bytes(plaintext)
        except DecodeError:
            self._fail(rec, "malformed inner tx")
            return ExecutionResult(tx_id, rec.state, "malformed inner tx", 0)
        result = self._apply(inner)
        deposit = self.escrow.pop(tx_id)
        frac = self.config.refund_fraction
        refund = deposit * frac.numerator // frac.denominator
        self._credit(rec.tx.sender_address, refund)
        self.burned += deposit - refund
        rec.key = key
        rec.result = result
        self._pending_keys.append((tx_id, key.key))
        self._advance(rec, TxState.EXECUTED, result=result, refund=refund, inner_sender=inner.sender)
        return ExecutionResult(tx_id, rec.state, result, refund, inner)

    def _apply(self, inner: InnerTx) -> str:
        if not inner.verify():
            return "reverted: bad inner signature"
        sender = inner.sender
        if inner.nonce != self.nonces.get(sender, 0):
            return "reverted: bad nonce"
        if self.balance(sender) < inner.amount:
            return "reverted: insufficient funds"
        self.nonces[sender] = inner.nonce + 1
        self.balances[sender] -= inner.amount
        self._credit(inner.to, inner.amount)
        return "ok"

    def _fail(self, rec: TxRecord, reason: str) -> None:
        rec.failure = reason
        self.burned += self.escrow.pop(rec.tx_id, 0)
        self._advance(rec, TxState.FAILED, reason=reason)

    def fail_unreconstructable(self, tx_id: str, reason: str) -> None:
        rec = self._get(tx_id)
        if rec.state in (TxState.FINALIZED, TxState.REVEALED):
            self._fail(rec, reason)

    # -- disputes ------------------------------------------------------------
    def file_dispute(self, tx_id: str, evidence: Evidence, plaintiff: str, stake: Optional[int] = None) -> Verdict:
        """Slash a trustee whose valid share surfaced before the tx was revealed."""
        stake = self.config.plaintiff_stake if stake is None else stake
        rec = self.txs.get(tx_id)
        if rec is None:
            raise Rejection(f"unknown tx {tx_id}")
        self._debit(plaintiff, stake)
        index = evidence.index
        valid = self._evidence_valid(rec, evidence)
        early = rec.state < TxState.REVEALED
        if valid and early and self.collateral.get(index, 0) > 0:
            self._credit(plaintiff, stake + self.collateral.pop(index))
            verdict = Verdict(True, index, "valid share released before reveal")
        else:
            self.burned += stake
            reason = "invalid evidence" if not valid else "tx already revealed" if not early else "no collateral"
            verdict = Verdict(False, index, reason)
        self._emit(tx_id, "dispute", slashed=verdict.slashed, trustee=index, reason=verdict.reason)
        return verdict

    def _evidence_valid(self, rec: TxRecord, evidence: Evidence) -> bool:
        tx = rec.tx
        try:
            if tx.protocol is Protocol.TDH2:
                if not isinstance(evidence, tdh2.Tdh2Share):
                    return False
                ct = tdh2.Tdh2Ciphertext.from_bytes(tx.c_k)
                ek = self.epochs.get(tx.epoch)
                if ek is None:
                    return False
                for keys in ek.generations.values():
                    if 1 <= evidence.index <= len(keys) and tdh2.verify_share(ct, evidence, keys[evidence.index - 1]):
                        return True
                return False
            if not isinstance(evidence, pvss.PvssDecShare):
                return False
            deal = pvss.PvssDeal.from_bytes(tx.c_k)
            pks = self.rosters[tx.epoch][0]
            if not 1 <= evidence.index <= len(pks):
                return False
            entry = deal.share(evidence.index)
            return pvss.verify_dec_share(pks[evidence.index - 1], entry.s_hat, evidence)
        except (DecodeError, KeyError, ValueError):
            return False

    # -- helpers -------------------------------------------------------------
    def _get(self, tx_id: str) -> TxRecord:
        try:
            return self.txs[tx_id]
        except KeyError:
            raise Rejection(f"unknown tx {tx_id}") from None

    def state(self, tx_id: str) -> TxState:
        return self._get(tx_id).state

    def _emit(self, tx_id, event, **extra) -> None:
        self.trace.emit(tx_id, event, self.loop.now_ms, self.height, **extra)
