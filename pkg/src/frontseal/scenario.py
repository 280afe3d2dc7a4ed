"""Scenario configs and the end-to-end simulation runner.

A scenario file is YAML (plain ``key: value`` lines are enough)::

    n: 5
    protocol: tdh2
    m: 3
    block_time_ms: 12000
    txs: 10
    seed: 7
    faults: {2: crash, 4: leak_early}
    reshare_at_blocks: [2]
"""

from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml

from .chain.ledger import Chain, ChainConfig, TxState
from .chain.loop import Bus, EventLoop, Trace
from .chain.tx import Identity, Protocol, make_inner_tx
from .client import Client
from .errors import DomainError, FrontsealError
from .smc import FAULTS, Committee, epoch_tick


@dataclass
class ScenarioConfig:
    n: int = 4
    t: Optional[int] = None
    m: int = 3
    block_time_ms: float = 12_000
    protocol: str = "tdh2"
    seed: int = 0
    hop_delay_ms: float = 100.0
    txs: int = 4
    senders: int = 2
    tx_interval_ms: Optional[float] = None
    with_hk: bool = True
    faults: Dict[int, str] = field(default_factory=dict)
    reshare_at_blocks: List[int] = field(default_factory=list)
    rotate_at_blocks: List[int] = field(default_factory=list)
    batch: Optional[int] = None
    refund_fraction: Union[float, str] = 0.9
    deposit_per_byte: int = 1
    key_write_deadline_blocks: int = 4
    grace_blocks: int = 32
    keygen: str = "dkg"
    label: str = "frontseal-genesis"
    initial_balance: int = 1_000_000
    extra_blocks: int = 0

    def __post_init__(self):
        self.protocol = Protocol.parse(self.protocol).name.lower()
        self.faults = {int(k): str(v) for k, v in (self.faults or {}).items()}
        if self.t is None:
            self.t = self.n // 2 + 1
        if not 1 <= self.t <= self.n:
            raise DomainError(f"need 1 <= t <= n, got t={self.t}, n={self.n}")
        for idx, kind in self.faults.items():
            if not 1 <= idx <= self.n:
                raise DomainError(f"fault index {idx} outside 1..{self.n}")
            if kind not in FAULTS:
                raise DomainError(f"unknown fault {kind!r}; expected one of {FAULTS}")
        if self.txs < 0 or self.senders < 1:
            raise DomainError("txs must be >= 0 and senders >= 1")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        aliases = {"L_b": "block_time_ms", "confirmations": "m", "batch_size": "batch"}
        clean = {}
        for key, value in data.items():
            key = aliases.get(key, key)
            if key not in known:
                raise DomainError(f"unknown scenario key {key!r}")
            clean[key] = value
        return cls(**clean)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ScenarioConfig":
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise DomainError("scenario file must hold a key/value mapping")
        return cls.from_mapping(data)

    def chain_config(self) -> ChainConfig:
        return ChainConfig(
            block_time_ms=float(self.block_time_ms),
            confirmations=self.m,
            label=self.label.encode(),
            storage_deposit_per_byte=self.deposit_per_byte,
            refund_fraction=Fraction(str(self.refund_fraction)),
            key_write_deadline_blocks=self.key_write_deadline_blocks,
            block_capacity=self.batch,
            grace_blocks=self.grace_blocks,
        )


@dataclass
class SimulationResult:
    config: ScenarioConfig
    chain: Chain
    committee: Committee
    trace: Trace
    tx_ids: List[str]
    rejected: List[str]

    @property
    def executed(self) -> List[str]:
        return [i for i in self.tx_ids if self.chain.txs[i].state is TxState.EXECUTED]

    @property
    def failed(self) -> List[str]:
        return [i for i in self.tx_ids if self.chain.txs[i].state is TxState.FAILED]

    def plaintext_after_finality(self) -> bool:
        """Every plaintext exposure happens at or after the tx's Finalized event."""
        for tx_id in self.tx_ids:
            exposed = self.trace.first(tx_id, "plaintext_exposed")
            if exposed is None:
                continue
            final = self.trace.first(tx_id, "finalized")
            if final is None or exposed["sim_time_ms"] < final["sim_time_ms"]:
                return False
            if self.trace.records.index(exposed) < self.trace.records.index(final):
                return False
        return True

    def summary(self) -> Dict[str, Any]:
        lat = [
            self.chain.txs[i].timestamps["executed"] - self.chain.txs[i].timestamps["included"]
            for i in self.executed
        ]
        return {
            "txs": len(self.tx_ids),
            "executed": len(self.executed),
            "failed": len(self.failed),
            "rejected": len(self.rejected),
            "height": self.chain.height,
            "conservation": self.chain.check_conservation(),
            "confidentiality_violations": len(self.committee.monitor.violations) if self.committee.monitor else 0,
            "plaintext_after_finality": self.plaintext_after_finality(),
            "key_deadline_misses": len(self.chain.deadline_misses),
            "median_inclusion_to_execution_ms": sorted(lat)[len(lat) // 2] if lat else None,
        }


class Simulation:
    """Builds chain, committee and senders from a config and runs the workload."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.rng = random.Random(config.seed)
        self.loop = EventLoop()
        self.trace = Trace()
        self.chain = Chain(config.chain_config(), self.loop, self.trace)
        self.bus = Bus(self.loop, config.hop_delay_ms)
        self.senders = [Identity.generate(f"sender-{i}", self.rng) for i in range(config.senders)]
        self.recipient = Identity.generate("recipient", self.rng)
        for s in self.senders:
            self.chain.mint(s.address, config.initial_balance)
        self.chain.mint("operators", config.n * 2 * self.chain.config.collateral)
        self.committee = Committee(
            self.chain,
            self.bus,
            config.protocol,
            config.n,
            config.t,
            self.rng,
            faults=config.faults,
            keygen=config.keygen,
            collateral_owner="operators",
        )
        self.clients = [Client(s, self.chain, self.rng) for s in self.senders]
        self._nonces = [0] * len(self.senders)
        self.tx_ids: List[str] = []
        self.rejected: List[str] = []

    def _submit(self, i: int) -> None:
        k = i % len(self.clients)
        client = self.clients[k]
        inner = make_inner_tx(client.sender, self.recipient.address, 1 + i, self._nonces[k], b"call-%d" % i)
        try:
            tx = client.build(self.config.protocol, inner, with_hk=self.config.with_hk)
            receipt = self.chain.submit_tx(tx)
        except FrontsealError as exc:
            self.rejected.append(f"{i}: {exc}")
            self.trace.emit(None, "submission_rejected", self.loop.now_ms, self.chain.height, reason=str(exc))
            return
        self._nonces[k] += 1
        self.tx_ids.append(receipt.tx_id)

    def _at_height(self, height: int, action: str) -> None:
        self.loop.schedule(height * self.chain.config.block_time_ms, epoch_tick, self.committee, action)

    def run(self) -> SimulationResult:
        cfg = self.config
        lb = self.chain.config.block_time_ms
        interval = cfg.tx_interval_ms if cfg.tx_interval_ms is not None else lb / 2
        for i in range(cfg.txs):
            self.loop.schedule(i * interval, self._submit, i)
        for h in cfg.reshare_at_blocks:
            self._at_height(h, "reshare")
        for h in cfg.rotate_at_blocks:
            self._at_height(h, "rotate")
        last_submit = (cfg.txs - 1) * interval if cfg.txs else 0.0
        last_inclusion = int(last_submit // lb) + 1
        if cfg.batch:
            last_inclusion += -(-cfg.txs // cfg.batch)
        last = max([last_inclusion] + list(cfg.reshare_at_blocks) + list(cfg.rotate_at_blocks))
        until = last + cfg.m + cfg.key_write_deadline_blocks + 1 + cfg.extra_blocks
        self.chain.start(until_height=until)
        self.loop.run()
        return SimulationResult(cfg, self.chain, self.committee, self.trace, self.tx_ids, self.rejected)


def run_scenario(config: Union[ScenarioConfig, Mapping[str, Any], str, Path]) -> SimulationResult:
    if isinstance(config, (str, Path)):
        config = ScenarioConfig.load(config)
    elif not isinstance(config, ScenarioConfig):
        config = ScenarioConfig.from_mapping(config)
    return Simulation(config).run()
