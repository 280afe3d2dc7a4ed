import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontseal import aead
from frontseal.errors import AuthError, DecodeError
from frontseal.group import G, GroupElement


def test_roundtrip_and_overhead(rng):
    k = aead.derive_key(GroupElement.random(rng))
    env = aead.seal(k, b"transfer 5 to bob", rng)
    assert len(env) == len(b"transfer 5 to bob") + aead.OVERHEAD
    assert aead.open(k, env) == b"transfer 5 to bob"


def test_wrong_key_and_tamper_fail(rng):
    k = aead.derive_key(G)
    env = aead.seal(k, b"payload", rng)
    with pytest.raises(AuthError):
        aead.open(aead.derive_key(G + G), env)
    bad = bytearray(env)
    bad[-1] ^= 1
    with pytest.raises(AuthError):
        aead.open(k, bytes(bad))
    with pytest.raises(AuthError):
        aead.open(k, b"\x02" + env[1:])
    with pytest.raises(AuthError):
        aead.open(k, env[:10])


def test_key_derivation_is_deterministic_and_hash_commits():
    assert aead.derive_key(G) == aead.derive_key(G)
    assert aead.derive_key(G) != aead.derive_key(G + G)
    assert aead.key_hash(aead.derive_key(G)) != aead.key_hash(aead.derive_key(G + G))
    assert len(aead.key_hash(aead.derive_key(G))) == 32


def test_key_repr_is_redacted():
    k = aead.derive_key(G)
    assert k.key.hex() not in repr(k)
    with pytest.raises(DecodeError):
        aead.SymmetricKey(b"short")


@settings(max_examples=30, deadline=None)
@given(st.binary(max_size=512), st.integers(0, 2**32))
def test_roundtrip_property(data, seed):
    rng = random.Random(seed)
    k = aead.derive_key(GroupElement.random(rng))
    assert aead.open(k, aead.seal(k, data, rng)) == data
