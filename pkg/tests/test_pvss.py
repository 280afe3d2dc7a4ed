import random
from itertools import combinations

import pytest

import ristretto_ref as ref
from frontseal import pvss, sss
from frontseal.errors import DecodeError, DomainError, ThresholdError
from frontseal.group import G, GroupElement, Scalar, derive_generator, q

LABEL = b"chain-A"


@pytest.fixture(scope="module")
def roster():
    rng = random.Random(21)
    sks = [Scalar.random_nonzero(rng) for _ in range(5)]
    return sks, [sk * G for sk in sks]


@pytest.fixture(scope="module")
def dealt(roster):
    _, pks = roster
    return pvss.deal(pks, 3, LABEL, random.Random(22))


def test_deal_verifies_and_reconstructs(roster, dealt, rng):
    sks, pks = roster
    deal, secret = dealt
    assert pvss.verify_deal(deal, pks, LABEL)
    decs = [pvss.decrypt_share(sks[i - 1], deal.share(i), rng) for i in range(1, 6)]
    for d in decs:
        assert pvss.verify_dec_share(pks[d.index - 1], deal.share(d.index).s_hat, d)
    for subset in combinations(decs, 3):
        assert pvss.reconstruct(list(subset), 3) == secret


def test_commitments_and_shares_match_polynomial(roster, rng):
    _, pks = roster
    poly = sss.sample_polynomial(3, rng=rng)
    deal, secret = pvss.deal(pks, 3, LABEL, rng, poly=poly)
    h = derive_generator(LABEL)
    assert secret == poly.secret * G
    for i in range(1, 6):
        s_i = sss.eval(poly, i).value
        assert pvss.commitment_eval(deal.commitments, i) == s_i * h
        assert deal.share(i).s_hat == s_i * pks[i - 1]


def test_commitment_eval_against_oracle(roster, dealt):
    deal, _ = dealt
    for i in (1, 4):
        acc = ref.IDENTITY
        for j, b in enumerate(deal.commitments):
            acc = ref.add(acc, ref.mul(pow(i, j, q), ref.decode(b.to_bytes())))
        assert pvss.commitment_eval(deal.commitments, i).to_bytes() == ref.encode(acc)


def test_label_binding(roster, dealt):
    _, pks = roster
    deal, _ = dealt
    assert not pvss.verify_deal(deal, pks, b"chain-B")


def test_wrong_roster_rejected(roster, dealt, rng):
    _, pks = roster
    deal, _ = dealt
    other = list(pks)
    other[2] = GroupElement.random(rng)
    assert not pvss.verify_deal(deal, other, LABEL)
    assert not pvss.verify_deal(deal, pks[:4], LABEL)


def test_decrypted_share_bound_to_trustee(roster, dealt, rng):
    sks, pks = roster
    deal, _ = dealt
    d = pvss.decrypt_share(sks[0], deal.share(1), rng)
    assert not pvss.verify_dec_share(pks[1], deal.share(1).s_hat, d)
    # a different s_i with the same proof fails
    forged = pvss.PvssDecShare(1, d.s_i + G, d.proof)
    assert not pvss.verify_dec_share(pks[0], deal.share(1).s_hat, forged)
    ident = pvss.PvssDecShare(1, GroupElement.identity(), d.proof)
    assert not pvss.verify_dec_share(pks[0], deal.share(1).s_hat, ident)


def test_decrypt_rejects_zero_key(dealt):
    deal, _ = dealt
    with pytest.raises(DomainError):
        pvss.decrypt_share(Scalar(0), deal.share(1))


def test_reconstruct_errors(roster, dealt, rng):
    sks, _ = roster
    deal, _ = dealt
    decs = [pvss.decrypt_share(sks[i - 1], deal.share(i), rng) for i in (1, 2)]
    with pytest.raises(ThresholdError):
        pvss.reconstruct(decs, 3)
    with pytest.raises(DomainError):
        pvss.reconstruct([decs[0], decs[0], decs[1]], 3)


def test_serialization_and_size_formula(roster, dealt, rng):
    _, pks = roster
    deal, _ = dealt
    raw = deal.to_bytes()
    assert len(raw) == pvss.deal_size(5, 3) == 100 * 5 + 32 * 3 + 9
    assert pvss.PvssDeal.from_bytes(raw) == deal
    with pytest.raises(DecodeError):
        pvss.PvssDeal.from_bytes(raw[:-1])
    dup = bytearray(raw)
    dup[9 + 100 : 9 + 104] = (1).to_bytes(4, "big")
    with pytest.raises(DecodeError):
        pvss.PvssDeal.from_bytes(bytes(dup))


def test_deal_argument_checks(roster, rng):
    _, pks = roster
    with pytest.raises(DomainError):
        pvss.deal(pks, 6, LABEL, rng)
    with pytest.raises(DomainError):
        pvss.deal(pks, 3, LABEL, rng, poly=sss.sample_polynomial(2, rng=rng))


def test_dleq_binds_statement():
    rng = random.Random(8)
    x = Scalar.random_nonzero(rng)
    b2 = GroupElement.random(rng)
    proof = pvss.dleq_prove(b"t", G, x * G, b2, x * b2, x, rng)
    assert pvss.dleq_verify(b"t", G, x * G, b2, x * b2, proof)
    assert not pvss.dleq_verify(b"other", G, x * G, b2, x * b2, proof)
    assert not pvss.dleq_verify(b"t", G, x * G, b2, (x + 1) * b2, proof)
