import random
from itertools import combinations

import pytest

from frontseal import dkg, sss, tdh2
from frontseal.errors import AbortError, DomainError
from frontseal.group import G, GroupElement, Scalar

LABEL = b"chain-A"


def _secret(out, indices):
    return sss.interpolate_at_zero([sss.Share(i, out.secret_shares[i]) for i in indices])


def _decrypts(out, ct, payload, rng, indices):
    shares = [tdh2.create_share(out.secret_shares[i], i, ct, LABEL, rng) for i in indices]
    assert all(tdh2.verify_share(ct, s, out.public_key.h(s.index)) for s in shares)
    return tdh2.combine(ct, shares, out.threshold) == payload


@pytest.mark.parametrize("n", [1, 3, 4, 7])
def test_dkg_shares_are_consistent(n, rng):
    t = n // 2 + 1
    out = dkg.run_dkg(n, t, rng, epoch=3)
    assert out.n == n and out.epoch == 3 and out.generation == 0
    secrets = {_secret(out, sub) for sub in combinations(range(1, n + 1), t)}
    assert len(secrets) == 1
    secret = secrets.pop()
    assert secret * G == out.public_key.pk
    for i in range(1, n + 1):
        assert out.secret_shares[i] * G == out.public_key.h(i)


def test_dkg_stats_count_both_rounds(rng):
    out = dkg.run_dkg(4, 3, rng, hop_delay_ms=100.0)
    assert out.stats.rounds == 2
    assert out.stats.network_ms == 200.0
    assert out.stats.latency_ms >= 200.0
    assert out.stats.messages > 0 and out.stats.bytes_sent > 0


def test_dkg_excludes_bad_dealer(rng):
    out = dkg.run_dkg(5, 3, rng, faults={2: "bad_share"})
    assert out.stats.excluded == (2,)
    ct = tdh2.encrypt(out.public_key, G, LABEL, rng)
    assert _decrypts(out, ct, G, rng, [1, 3, 5])
    assert _decrypts(out, ct, G, rng, [2, 4, 5])


def test_dkg_tolerates_crashes(rng):
    out = dkg.run_dkg(5, 3, rng, faults={1: "crash", 4: "crash"})
    assert set(out.secret_shares) == {2, 3, 5}
    ct = tdh2.encrypt(out.public_key, G, LABEL, rng)
    assert _decrypts(out, ct, G, rng, [2, 3, 5])


def test_dkg_aborts_without_enough_honest_dealers(rng):
    with pytest.raises(AbortError):
        dkg.run_dkg(5, 3, rng, faults={1: "crash", 2: "crash", 3: "crash"})


def test_dkg_argument_checks(rng):
    with pytest.raises(DomainError):
        dkg.run_dkg(3, 4, rng)
    with pytest.raises(DomainError):
        dkg.run_dkg(3, 2, rng, roster=["a", "b"])


@pytest.mark.parametrize("replace", [0, 1, 2])
def test_reshare_keeps_public_key(replace, rng):
    old = dkg.run_dkg(8, 5, rng, epoch=1)
    roster = list(old.roster)
    for k in range(replace):
        roster[k] = f"new-{k}"
    payload = GroupElement.random(rng)
    ct = tdh2.encrypt(old.public_key, payload, LABEL, rng)
    new = dkg.reshare(old, roster, 5, rng)
    assert new.public_key.pk == old.public_key.pk
    assert new.generation == 1 and new.roster == tuple(roster)
    assert _decrypts(new, ct, payload, rng, [1, 4, 6, 7, 8])
    assert new.public_key.verification_keys != old.public_key.verification_keys


def test_reshare_changes_threshold_and_size(rng):
    old = dkg.run_dkg(5, 3, rng)
    new = dkg.reshare(old, [f"m{i}" for i in range(7)], 4, rng)
    assert new.n == 7 and new.threshold == 4
    assert _secret(new, [2, 3, 5, 7]) * G == old.public_key.pk


def test_mixed_generation_shares_do_not_interpolate(rng):
    old = dkg.run_dkg(5, 3, rng)
    new = dkg.reshare(old, old.roster, 3, rng)
    mixed = [sss.Share(1, old.secret_shares[1]), sss.Share(2, new.secret_shares[2]), sss.Share(3, new.secret_shares[3])]
    assert sss.interpolate_at_zero(mixed) * G != old.public_key.pk


def test_reshare_with_crashed_and_bad_old_trustees(rng):
    old = dkg.run_dkg(7, 4, rng)
    new = dkg.reshare(old, old.roster, 4, rng, live=[1, 2, 3, 5, 6], faults={2: "bad_share"})
    assert new.public_key.pk == old.public_key.pk
    assert 2 in new.stats.excluded


def test_reshare_aborts_below_old_threshold(rng):
    old = dkg.run_dkg(5, 3, rng)
    with pytest.raises(AbortError):
        dkg.reshare(old, old.roster, 3, rng, live=[1, 2])


def test_dealer_keygen_shape(rng):
    out = dkg.dealer_keygen(6, 4, rng, epoch=2)
    assert _secret(out, [1, 3, 5, 6]) * G == out.public_key.pk
    assert out.public_key.n == 6
