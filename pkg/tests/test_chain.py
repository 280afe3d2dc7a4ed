import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontseal import aead, dkg
from frontseal.chain import Chain, ChainConfig, Identity, Protocol, TxState, WriteTx, collateral_check
from frontseal.chain.ledger import VALIDATOR_ACCOUNT
from frontseal.chain.tx import InnerTx, make_inner_tx, sign_envelope
from frontseal.client import build_tdh2_tx
from frontseal.errors import KeyRejectedError, OrderingError, Rejection, StaleKeyError
from frontseal.group import G

from support import make_world


def bare_chain(m=2, seed=3, **cfg):
    """A chain with an epoch key but no committee, driven block by block."""
    rng = random.Random(seed)
    chain = Chain(ChainConfig(confirmations=m, block_time_ms=1000.0, **cfg))
    out = dkg.dealer_keygen(4, 3, rng)
    chain.publish_epoch_key(1, out.public_key)
    alice, bob = Identity.generate("alice", rng), Identity.generate("bob", rng)
    chain.mint(alice.address, 50_000)
    return chain, alice, bob, rng


def envelope(chain, alice, bob, rng, amount=5, nonce=0, with_hk=False):
    inner = make_inner_tx(alice, bob.address, amount, nonce)
    tx = build_tdh2_tx(alice, inner, chain.epoch_public_key(1), chain.config.label, with_hk, rng=rng)
    return tx


def test_deposit_is_per_byte_and_fee_goes_to_validators():
    chain, alice, bob, rng = bare_chain(storage_deposit_per_byte=3)
    tx = build_tdh2_tx(alice, make_inner_tx(alice, bob.address, 5, 0), chain.epoch_public_key(1),
                       chain.config.label, deposit_per_byte=3, rng=rng)
    before = chain.balance(alice.address)
    receipt = chain.submit_tx(tx.to_bytes())
    assert receipt.deposit == 3 * tx.size == 3 * len(tx.to_bytes())
    assert chain.balance(alice.address) == before - receipt.deposit - receipt.fee
    assert chain.balance(VALIDATOR_ACCOUNT) == receipt.fee
    assert chain.escrow[receipt.tx_id] == receipt.deposit
    assert chain.check_conservation()


def test_rejections():
    chain, alice, bob, rng = bare_chain()
    tx = envelope(chain, alice, bob, rng)
    with pytest.raises(Rejection):
        chain.submit_tx(tx.to_bytes()[:-1])
    with pytest.raises(Rejection):
        chain.submit_tx(replace(tx, signature=bytes(64)))
    with pytest.raises(Rejection):
        chain.submit_tx(replace(tx, c_k=tx.c_k[:-1]))
    underpaid = sign_envelope(alice, Protocol.TDH2, 1, tx.c_tx, tx.c_k, None, 1)
    underpaid = replace(underpaid, deposit_paid=underpaid.deposit_paid - 1)
    underpaid = replace(underpaid, signature=alice.sign(underpaid.signing_bytes()))
    with pytest.raises(Rejection, match="deposit"):
        chain.submit_tx(underpaid)
    chain.submit_tx(tx)
    with pytest.raises(Rejection, match="duplicate"):
        chain.submit_tx(tx)
    pauper = Identity.generate("pauper", rng)
    poor = build_tdh2_tx(pauper, b"x", chain.epoch_public_key(1), chain.config.label, rng=rng)
    with pytest.raises(Rejection, match="insufficient"):
        chain.submit_tx(poor)
    with pytest.raises(StaleKeyError):
        chain.submit_tx(sign_envelope(alice, Protocol.TDH2, 9, tx.c_tx, tx.c_k, None, 1))
    assert chain.check_conservation()


def test_mempool_shows_no_plaintext():
    chain, alice, bob, rng = bare_chain()
    inner = make_inner_tx(alice, bob.address, 4242, 0, b"swap-token-xyz" * 4)
    chain.submit_tx(build_tdh2_tx(alice, inner, chain.epoch_public_key(1), chain.config.label, rng=rng))
    (raw,) = chain.observe_mempool()
    assert b"swap-token-xyz" not in raw
    assert inner.to_bytes() not in raw
    assert bytes.fromhex(bob.address) not in raw


def test_finality_after_m_blocks_and_empty_blocks():
    chain, alice, bob, rng = bare_chain(m=3)
    empty = chain.advance_block()
    assert empty.tx_ids == () and empty.time_ms == 1000.0
    tx_id = chain.submit_tx(envelope(chain, alice, bob, rng)).tx_id
    chain.advance_block()
    assert chain.state(tx_id) is TxState.INCLUDED
    assert chain.txs[tx_id].inclusion_height == 2
    for _ in range(2):
        chain.advance_block()
        assert chain.state(tx_id) is TxState.INCLUDED
    chain.advance_block()
    assert chain.state(tx_id) is TxState.FINALIZED
    assert chain.txs[tx_id].timestamps["finalized"] == 5000.0


def test_block_capacity_keeps_fifo_order():
    chain, alice, bob, rng = bare_chain(block_capacity=2)
    ids = [chain.submit_tx(envelope(chain, alice, bob, rng, nonce=i)).tx_id for i in range(5)]
    assert chain.advance_block().tx_ids == tuple(ids[:2])
    assert chain.advance_block().tx_ids == tuple(ids[2:4])
    assert chain.advance_block().tx_ids == (ids[4],)


def test_reveal_before_finality_is_an_ordering_error():
    chain, alice, bob, rng = bare_chain()
    tx_id = chain.submit_tx(envelope(chain, alice, bob, rng)).tx_id
    chain.advance_block()
    with pytest.raises(OrderingError):
        chain.reveal_and_execute(tx_id, aead.derive_key(G))
    with pytest.raises(OrderingError):
        chain.mark_revealed(tx_id)


def test_wrong_key_fails_and_burns_deposit():
    chain, alice, bob, rng = bare_chain(m=1)
    r = chain.submit_tx(envelope(chain, alice, bob, rng))
    chain.advance_block()
    chain.advance_block()
    res = chain.reveal_and_execute(r.tx_id, aead.derive_key(G))
    assert res.state is TxState.FAILED and res.refund == 0
    assert chain.burned == r.deposit
    assert r.tx_id not in chain.escrow
    assert chain.check_conservation()
    with pytest.raises(OrderingError):
        chain.reveal_and_execute(r.tx_id, aead.derive_key(G))


def test_hk_mismatch_is_rejected():
    chain, alice, bob, rng = bare_chain(m=1)
    r = chain.submit_tx(envelope(chain, alice, bob, rng, with_hk=True))
    chain.advance_block()
    chain.advance_block()
    with pytest.raises(KeyRejectedError):
        chain.reveal_and_execute(r.tx_id, aead.derive_key(G))
    assert chain.state(r.tx_id) is TxState.FAILED


def test_honest_execution_refunds_and_transfers():
    w = make_world(m=2)
    tx, r = w.submit(amount=25)
    before = w.chain.balance(w.alice.address)
    w.run_blocks(6)
    rec = w.chain.txs[r.tx_id]
    assert rec.state is TxState.EXECUTED and rec.result == "ok"
    refund = r.deposit * 9 // 10
    assert w.chain.balance(w.alice.address) == before - 25 + refund
    assert w.chain.balance(w.bob.address) == 25
    assert w.chain.burned == r.deposit - refund
    assert rec.key_height == rec.inclusion_height + 3
    assert not w.chain.deadline_misses
    assert w.chain.check_conservation()


def test_copied_envelope_executes_victims_tx():
    w = make_world(m=2)
    victim_tx, victim = w.submit(amount=30)
    mallory = Identity.generate("mallory", w.rng)
    w.chain.mint(mallory.address, 10_000)
    copy = sign_envelope(mallory, victim_tx.protocol, victim_tx.epoch, victim_tx.c_tx, victim_tx.c_k, None, 1)
    copied = w.chain.submit_tx(copy)
    w.run_blocks(6)
    ev = w.chain.trace.first(copied.tx_id, "executed")
    assert ev is not None and ev["inner_sender"] == w.alice.address
    # the same signed inner tx ran under both envelopes; the nonce stops a second transfer
    results = {w.chain.txs[victim.tx_id].result, w.chain.txs[copied.tx_id].result}
    assert results == {"ok", "reverted: bad nonce"}
    assert w.chain.balance(w.bob.address) == 30
    assert w.chain.balance(mallory.address) < 10_000


def test_reverted_inner_tx_still_executes_the_envelope():
    w = make_world(m=1)
    _, r = w.submit(amount=10**9)
    w.run_blocks(4)
    assert w.chain.txs[r.tx_id].state is TxState.EXECUTED
    assert w.chain.txs[r.tx_id].result == "reverted: insufficient funds"


def test_key_deadline_miss_is_recorded():
    chain, alice, bob, rng = bare_chain(m=1, key_write_deadline_blocks=1)
    k = aead.derive_key(G * 5)
    inner = make_inner_tx(alice, bob.address, 1, 0)
    tx = sign_envelope(alice, Protocol.TDH2, 1, aead.seal(k, inner.to_bytes(), rng), envelope(chain, alice, bob, rng).c_k, None, 1)
    tx_id = chain.submit_tx(tx).tx_id
    for _ in range(3):
        chain.advance_block()
    chain.reveal_and_execute(tx_id, k)
    chain.advance_block()
    assert chain.deadline_misses == [tx_id]


def test_grace_window_for_old_epoch_key():
    chain, alice, bob, rng = bare_chain(grace_blocks=2)
    old_tx = envelope(chain, alice, bob, rng)
    chain.publish_epoch_key(2, dkg.dealer_keygen(4, 3, rng).public_key)
    chain.advance_block()
    chain.advance_block()
    chain.submit_tx(old_tx)
    chain.advance_block()
    late = envelope(chain, alice, bob, rng, nonce=1)
    with pytest.raises(StaleKeyError):
        chain.submit_tx(late)
    # a stale-key rejection is retriable: rebuild under the current epoch
    fresh = build_tdh2_tx(alice, b"retry", chain.epoch_public_key(), chain.config.label, epoch=2, rng=rng)
    chain.submit_tx(fresh)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.sampled_from(["block", "submit", "reveal"]), min_size=1, max_size=25))
def test_lifecycle_is_monotone(ops):
    chain, alice, bob, rng = bare_chain(m=2)
    order = {}
    nonce = 0
    for op in ops:
        if op == "submit":
            tx_id = chain.submit_tx(envelope(chain, alice, bob, rng, nonce=nonce)).tx_id
            nonce += 1
            order[tx_id] = [chain.state(tx_id)]
        elif op == "block":
            chain.advance_block()
        else:
            for tx_id, rec in chain.txs.items():
                if rec.state is TxState.FINALIZED:
                    chain.reveal_and_execute(tx_id, aead.derive_key(G))
                    break
        for tx_id, seen in order.items():
            seen.append(chain.state(tx_id))
    for seen in order.values():
        terminal = [s for s in seen if s is TxState.FAILED]
        linear = [s for s in seen if s is not TxState.FAILED]
        assert linear == sorted(linear)
        if terminal:
            assert seen[seen.index(TxState.FAILED):] == terminal
    assert chain.check_conservation()


def test_dispute_slashes_pre_reveal_leak():
    w = make_world(m=3, faults={1: "leak_early"})
    _, r = w.submit()
    w.chain.start(until_height=1)
    w.loop.run_until(1500.0)
    leaked = w.committee.adversary.evidence(r.tx_id)
    assert leaked and w.chain.state(r.tx_id) is TxState.INCLUDED
    w.chain.mint("watcher", 5000)
    verdict = w.chain.file_dispute(r.tx_id, leaked[0], "watcher")
    assert verdict.slashed and verdict.trustee_index == leaked[0].index
    assert w.chain.balance("watcher") == 5000 + w.chain.config.collateral
    assert w.chain.check_conservation()


def test_dispute_after_reveal_forfeits_stake():
    w = make_world(m=2, faults={2: "leak_early"})
    _, r = w.submit()
    w.run_blocks(5)
    assert w.chain.state(r.tx_id) is TxState.EXECUTED
    evidence = w.committee.adversary.evidence(r.tx_id)[0]
    w.chain.mint("late", 5000)
    verdict = w.chain.file_dispute(r.tx_id, evidence, "late")
    assert not verdict.slashed
    assert w.chain.balance("late") == 5000 - w.chain.config.plaintiff_stake
    assert w.chain.check_conservation()


def test_forged_evidence_does_not_slash():
    w = make_world(m=3, faults={1: "leak_early"})
    _, r = w.submit()
    w.chain.start(until_height=1)
    w.loop.run_until(1500.0)
    real = w.committee.adversary.evidence(r.tx_id)[0]
    forged = replace(real, u_i=real.u_i + G)
    w.chain.mint("liar", 5000)
    assert not w.chain.file_dispute(r.tx_id, forged, "liar").slashed
    assert w.chain.collateral[real.index] == w.chain.config.collateral
    assert w.chain.balance("liar") == 5000 - w.chain.config.plaintiff_stake


def test_dispute_on_unknown_tx_takes_no_stake():
    w = make_world()
    w.chain.mint("p", 5000)
    with pytest.raises(Rejection):
        w.chain.file_dispute("00" * 16, None, "p")
    assert w.chain.balance("p") == 5000


@pytest.mark.parametrize(
    "c, a, t, mx, expected",
    [
        (10, 0.1, 5, 54, True),
        (10, 0.1, 5, 55, False),
        (10, 0.1, 5, 56, False),
        (10, 0, 5, 49, True),
        (10, 0, 5, 50, False),
        (10, 0.1, 0, 0, False),
        (1, "1/3", 3, 3, True),
        (1, "1/3", 3, 4, False),
    ],
)
def test_collateral_check(c, a, t, mx, expected):
    from fractions import Fraction

    a = Fraction(a) if isinstance(a, str) else a
    assert collateral_check(c, a, t, mx) is expected


def test_envelope_roundtrip():
    chain, alice, bob, rng = bare_chain()
    tx = envelope(chain, alice, bob, rng, with_hk=True)
    assert WriteTx.from_bytes(tx.to_bytes()) == tx
    assert tx.verify_signature()
    inner = make_inner_tx(alice, bob.address, 5, 2, b"hi")
    assert InnerTx.from_bytes(inner.to_bytes()) == inner and inner.verify()
