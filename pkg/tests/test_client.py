import random

import pytest

from frontseal import aead, pvss, tdh2
from frontseal.chain import TxState
from frontseal.client import build_pvss_tx, build_tdh2_tx, precompute_pvss
from frontseal.errors import DealReuseError, StaleDealError
from frontseal.group import G, Scalar
from frontseal.smc import epoch_tick

from support import make_world


@pytest.mark.parametrize("payload_len", [0, 1, 100, 1000])
def test_tdh2_envelope_size_is_payload_plus_constant(payload_len):
    w = make_world()
    tx = build_tdh2_tx(w.alice, b"p" * payload_len, w.committee.public_key, w.chain.config.label, rng=w.rng)
    assert len(tx.c_k) == tdh2.CIPHERTEXT_BYTES == 160
    assert len(tx.c_tx) == payload_len + aead.OVERHEAD
    base = build_tdh2_tx(w.alice, b"", w.committee.public_key, w.chain.config.label, rng=w.rng).size
    assert tx.size == base + payload_len


def test_hk_adds_32_bytes():
    w = make_world()
    a = build_tdh2_tx(w.alice, b"x", w.committee.public_key, w.chain.config.label, rng=w.rng)
    b = build_tdh2_tx(w.alice, b"x", w.committee.public_key, w.chain.config.label, True, rng=w.rng)
    assert b.size - a.size == 32


def test_tdh2_ciphertext_is_bound_to_label():
    w = make_world()
    tx = build_tdh2_tx(w.alice, b"x", w.committee.public_key, w.chain.config.label, rng=w.rng)
    ct = tdh2.Tdh2Ciphertext.from_bytes(tx.c_k)
    assert tdh2.verify_ciphertext(ct, w.chain.config.label)
    assert not tdh2.verify_ciphertext(ct, b"other-chain")


def test_precomputed_deal_equals_inline():
    w = make_world("pvss", n=5)
    prepared = w.client.precompute()
    assert pvss.verify_deal(prepared.deal, w.chain.roster, w.chain.config.label)
    deal, key = prepared
    tx = w.client.pvss_tx(w.transfer(), prepared=prepared)
    assert tx.c_k == deal.to_bytes()
    assert aead.open(key, tx.c_tx) == w.transfer().to_bytes()
    r = w.chain.submit_tx(tx)
    w.run_blocks(6)
    assert w.chain.state(r.tx_id) is TxState.EXECUTED


def test_deal_reuse_and_stale_roster():
    w = make_world("pvss", n=4)
    prepared = w.client.precompute()
    w.client.pvss_tx(w.transfer(), prepared=prepared)
    with pytest.raises(DealReuseError):
        w.client.pvss_tx(w.transfer(nonce=1), prepared=prepared)
    old = w.client.precompute()
    epoch_tick(w.committee)
    with pytest.raises(StaleDealError):
        w.client.pvss_tx(w.transfer(nonce=1), prepared=old)
    # skipping the client-side check still fails at the chain
    with pytest.raises(StaleDealError):
        w.chain.submit_tx(build_pvss_tx(w.alice, old, b"x"))


def test_build_pvss_tx_needs_prepared_deal():
    w = make_world("pvss", n=4)
    with pytest.raises(TypeError):
        build_pvss_tx(w.alice, "not a deal", b"x")


def test_hk_fast_path_in_trace():
    w = make_world(m=2)
    _, with_hk = w.submit(with_hk=True)
    _, plain = w.submit(nonce=1, with_hk=False)
    w.run_blocks(5)
    assert w.chain.trace.first(with_hk.tx_id, "key_checked")["path"] == "hk"
    assert w.chain.trace.first(plain.tx_id, "key_checked")["path"] == "shares"
    assert w.chain.state(with_hk.tx_id) is w.chain.state(plain.tx_id) is TxState.EXECUTED


def test_protocols_give_same_outcome():
    outcomes = {}
    for proto in ("tdh2", "pvss"):
        w = make_world(proto, n=4, m=2)
        _, a = w.submit(amount=12)
        _, b = w.submit(amount=10**9, nonce=1)
        w.run_blocks(5)
        outcomes[proto] = (
            w.chain.txs[a.tx_id].result,
            w.chain.txs[b.tx_id].result,
            w.chain.balance(w.bob.address),
        )
    assert outcomes["tdh2"] == outcomes["pvss"] == ("ok", "reverted: insufficient funds", 12)


def test_pvss_c_k_grows_linearly_in_n():
    rng = random.Random(2)
    w = make_world("pvss", n=4)
    sizes = {}
    for n in (4, 8, 12):
        t = n // 2 + 1
        pks = [Scalar.random_nonzero(rng) * G for _ in range(n)]
        sizes[n] = len(precompute_pvss(w.alice, pks, t, b"L", rng=rng).deal.to_bytes())
    assert sizes[8] - sizes[4] == sizes[12] - sizes[8]
