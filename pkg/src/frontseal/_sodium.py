"""ctypes binding to the ristretto255 primitives of the system libsodium.

PyNaCl ships libsodium without the ristretto255 API, so the shared library is
loaded directly.  Only the handful of calls used by :mod:`frontseal.group` are
bound.
"""

import ctypes
import ctypes.util

_CANDIDATES = ("libsodium.so.23", "libsodium.so.26", "libsodium.dylib")


def _load() -> ctypes.CDLL:
    names = [ctypes.util.find_library("sodium"), *_CANDIDATES]
    for name in names:
        if not name:
            continue
        try:
            lib = ctypes.CDLL(name)
        except OSError:
            continue
        if hasattr(lib, "crypto_core_ristretto255_add"):
            break
    else:
        raise ImportError("libsodium >= 1.0.18 with ristretto255 support is required")
    if lib.sodium_init() < 0:
        raise ImportError("sodium_init failed")
    return lib


_lib = _load()

_b32 = ctypes.c_char_p
for _name, _argc in (
    ("crypto_scalarmult_ristretto255", 3),
    ("crypto_scalarmult_ristretto255_base", 2),
    ("crypto_core_ristretto255_add", 3),
    ("crypto_core_ristretto255_sub", 3),
    ("crypto_core_ristretto255_from_hash", 2),
    ("crypto_core_ristretto255_is_valid_point", 1),
):
    _fn = getattr(_lib, _name)
    _fn.argtypes = [_b32] * _argc
    _fn.restype = ctypes.c_int

_smul = _lib.crypto_scalarmult_ristretto255
_smul_base = _lib.crypto_scalarmult_ristretto255_base
_add = _lib.crypto_core_ristretto255_add
_sub = _lib.crypto_core_ristretto255_sub
_from_hash = _lib.crypto_core_ristretto255_from_hash
_is_valid = _lib.crypto_core_ristretto255_is_valid_point

IDENTITY = bytes(32)


def scalarmult(n: bytes, p: bytes) -> bytes:
    out = ctypes.create_string_buffer(32)
    # libsodium signals an identity result with -1
    if _smul(out, n, p) != 0:
        return IDENTITY
    return out.raw


def scalarmult_base(n: bytes) -> bytes:
    out = ctypes.create_string_buffer(32)
    if _smul_base(out, n) != 0:
        return IDENTITY
    return out.raw


def add(p: bytes, q: bytes) -> bytes:
    out = ctypes.create_string_buffer(32)
    if _add(out, p, q) != 0:
        raise ValueError("invalid point")
    return out.raw


def sub(p: bytes, q: bytes) -> bytes:
    out = ctypes.create_string_buffer(32)
    if _sub(out, p, q) != 0:
        raise ValueError("invalid point")
    return out.raw


def from_hash(h: bytes) -> bytes:
    out = ctypes.create_string_buffer(32)
    _from_hash(out, h)
    return out.raw


def is_valid_point(p: bytes) -> bool:
    return _is_valid(p) == 1
