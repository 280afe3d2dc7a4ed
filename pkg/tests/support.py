"""Small world builder shared by the chain, smc and client tests."""

import random
from dataclasses import dataclass

from frontseal.chain.ledger import Chain, ChainConfig
from frontseal.chain.loop import Bus, EventLoop, Trace
from frontseal.chain.tx import Identity, make_inner_tx
from frontseal.client import Client
from frontseal.smc import Committee


@dataclass
class World:
    loop: EventLoop
    chain: Chain
    bus: Bus
    committee: Committee
    alice: Identity
    bob: Identity
    client: Client
    rng: random.Random

    def transfer(self, amount=10, nonce=0, signer=None, call=b""):
        signer = signer or self.alice
        return make_inner_tx(signer, self.bob.address, amount, nonce, call)

    def submit(self, amount=10, nonce=0, with_hk=False):
        tx = self.client.build(self.committee.protocol, self.transfer(amount, nonce), with_hk=with_hk)
        return tx, self.chain.submit_tx(tx)

    def run_blocks(self, count):
        self.chain.start(until_height=self.chain.height + count)
        self.loop.run()


def make_world(protocol="tdh2", n=4, t=None, m=3, faults=None, seed=5, keygen="dealer", **cfg):
    rng = random.Random(seed)
    loop, trace = EventLoop(), Trace()
    config = ChainConfig(confirmations=m, block_time_ms=cfg.pop("block_time_ms", 1000.0), **cfg)
    chain = Chain(config, loop, trace)
    bus = Bus(loop, 100.0)
    alice = Identity.generate("alice", rng)
    bob = Identity.generate("bob", rng)
    chain.mint(alice.address, 100_000)
    chain.mint("operators", 100 * config.collateral)
    committee = Committee(
        chain, bus, protocol, n, t, rng, faults=faults, keygen=keygen, collateral_owner="operators"
    )
    return World(loop, chain, bus, committee, alice, bob, Client(alice, chain, rng), rng)
