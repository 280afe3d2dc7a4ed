"""Sender workflow: encrypt a signed inner transaction and wrap it for the chain."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from . import aead, pvss, tdh2
from .chain.ledger import Chain
from .chain.tx import Identity, InnerTx, Protocol, SenderKeypair, WriteTx, sign_envelope
from .errors import DealReuseError, StaleDealError
from .group import GroupElement, Label, default_rng

__all__ = [
    "PreparedDeal",
    "SenderKeypair",
    "Client",
    "build_pvss_tx",
    "build_tdh2_tx",
    "precompute_pvss",
]


def _payload(inner_tx: Union[bytes, InnerTx]) -> bytes:
    return inner_tx.to_bytes() if isinstance(inner_tx, InnerTx) else bytes(inner_tx)


def build_tdh2_tx(
    sender: Identity,
    inner_tx: Union[bytes, InnerTx],
    epoch_pk: tdh2.Tdh2PublicKey,
    label: Label,
    with_hk: bool = False,
    *,
    epoch: int = 1,
    deposit_per_byte: int = 1,
    rng: Optional[random.Random] = None,
) -> WriteTx:
    rng = default_rng(rng)
    k_point = GroupElement.random(rng)
    k = aead.derive_key(k_point)
    c_tx = aead.seal(k, _payload(inner_tx), rng)
    c_k = tdh2.encrypt(epoch_pk, k_point, label, rng).to_bytes()
    h_k = aead.key_hash(k) if with_hk else None
    return sign_envelope(sender, Protocol.TDH2, epoch, c_tx, c_k, h_k, deposit_per_byte)


@dataclass
class PreparedDeal:
    """A PVSS deal dealt ahead of time.  Good for exactly one transaction."""

    deal: pvss.PvssDeal
    key: aead.SymmetricKey
    roster_epoch: int
    label: Label
    dealing_wall_ms: float = 0.0
    used: bool = field(default=False, repr=False)

    def __iter__(self):
        # allows ``deal, k = precompute_pvss(...)``
        yield self.deal
        yield self.key


def precompute_pvss(
    sender: Identity,
    trustee_pks: Sequence[GroupElement],
    t: int,
    label: Label,
    *,
    roster_epoch: int = 1,
    rng: Optional[random.Random] = None,
) -> PreparedDeal:
    t0 = time.perf_counter()
    deal, secret = pvss.deal(trustee_pks, t, label, default_rng(rng))
    wall = (time.perf_counter() - t0) * 1000.0
    return PreparedDeal(deal, aead.derive_key(secret), roster_epoch, label, wall)


def build_pvss_tx(
    sender: Identity,
    prepared: PreparedDeal,
    inner_tx: Union[bytes, InnerTx],
    with_hk: bool = False,
    *,
    current_roster_epoch: Optional[int] = None,
    deposit_per_byte: int = 1,
    rng: Optional[random.Random] = None,
) -> WriteTx:
    if not isinstance(prepared, PreparedDeal):
        raise TypeError("build_pvss_tx needs the PreparedDeal returned by precompute_pvss")
    if prepared.used:
        raise DealReuseError("this deal already backs another transaction")
    if current_roster_epoch is not None and current_roster_epoch != prepared.roster_epoch:
        raise StaleDealError(
            f"deal made for roster epoch {prepared.roster_epoch}, chain is at {current_roster_epoch}"
        )
    prepared.used = True
    c_tx = aead.seal(prepared.key, _payload(inner_tx), rng)
    h_k = aead.key_hash(prepared.key) if with_hk else None
    return sign_envelope(
        sender, Protocol.PVSS, prepared.roster_epoch, c_tx, prepared.deal.to_bytes(), h_k, deposit_per_byte
    )


class Client:
    """Convenience wrapper reading keys, label and deposit rate from a chain."""

    def __init__(self, sender: Identity, chain: Chain, rng: Optional[random.Random] = None):
        self.sender = sender
        self.chain = chain
        self.rng = default_rng(rng)

    @property
    def address(self) -> str:
        return self.sender.address

    def tdh2_tx(self, inner_tx, with_hk: bool = False, epoch: Optional[int] = None) -> WriteTx:
        epoch = self.chain.current_epoch if epoch is None else epoch
        return build_tdh2_tx(
            self.sender,
            inner_tx,
            self.chain.epoch_public_key(epoch),
            self.chain.config.label,
            with_hk,
            epoch=epoch,
            deposit_per_byte=self.chain.config.storage_deposit_per_byte,
            rng=self.rng,
        )

    def precompute(self) -> PreparedDeal:
        pks, t = self.chain.rosters[self.chain.roster_epoch]
        return precompute_pvss(
            self.sender, pks, t, self.chain.config.label, roster_epoch=self.chain.roster_epoch, rng=self.rng
        )

    def pvss_tx(self, inner_tx, with_hk: bool = False, prepared: Optional[PreparedDeal] = None) -> WriteTx:
        prepared = prepared if prepared is not None else self.precompute()
        return build_pvss_tx(
            self.sender,
            prepared,
            inner_tx,
            with_hk,
            current_roster_epoch=self.chain.roster_epoch,
            deposit_per_byte=self.chain.config.storage_deposit_per_byte,
            rng=self.rng,
        )

    def build(self, protocol, inner_tx, with_hk: bool = False) -> WriteTx:
        if Protocol.parse(protocol) is Protocol.TDH2:
            return self.tdh2_tx(inner_tx, with_hk)
        return self.pvss_tx(inner_tx, with_hk)
