"""Discrete-event blockchain simulator."""

from .ledger import (
    Block,
    Chain,
    ChainConfig,
    ExecutionResult,
    Receipt,
    TxRecord,
    TxState,
    Verdict,
    collateral_check,
)
from .loop import Bus, EventLoop, Trace
from .tx import Identity, InnerTx, Protocol, SenderKeypair, WriteTx, make_inner_tx, sign_envelope

__all__ = [
    "Block",
    "Bus",
    "Chain",
    "ChainConfig",
    "EventLoop",
    "ExecutionResult",
    "Identity",
    "InnerTx",
    "Protocol",
    "Receipt",
    "SenderKeypair",
    "Trace",
    "TxRecord",
    "TxState",
    "Verdict",
    "WriteTx",
    "collateral_check",
    "make_inner_tx",
    "sign_envelope",
]
