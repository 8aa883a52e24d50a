"""Counter-based random numbers for reproducible parallel streams.

Philox4x64-10 maps a 256-bit counter and a 128-bit key to four 64-bit words.
A replication is keyed by ``(master_seed, replication)`` and each draw uses
the counter ``(step, block, 0, 0)``, so any draw can be regenerated without
replaying the stream and results do not depend on how replications are
scheduled across threads.  Output matches ``numpy.random.Philox`` bit for bit.
"""

from __future__ import annotations

import numba as nb
import numpy as np

__all__ = ["philox4x64", "uniforms", "stream_key", "MASK64"]

MASK64 = (1 << 64) - 1

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@nb.njit(cache=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    lo_lo = a_lo * b_lo
    hi_lo = a_hi * b_lo
    lo_hi = a_lo * b_hi
    hi_hi = a_hi * b_hi
    cross = (lo_lo >> _S32) + (hi_lo & _LO32) + lo_hi
    hi = hi_hi + (hi_lo >> _S32) + (cross >> _S32)
    lo = a * b
    return hi, lo


@nb.njit(cache=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    for r in range(10):
        if r > 0:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@nb.njit(cache=True)
def uniforms(out, key0, key1, step, count):
    """Fill ``out[:count]`` with doubles in ``[0, 1)`` for counter ``step``."""
    block = np.uint64(0)
    i = 0
    while i < count:
        w0, w1, w2, w3 = philox4x64(np.uint64(step), block, np.uint64(0), np.uint64(0),
                                    key0, key1)
        for w in (w0, w1, w2, w3):
            if i < count:
                out[i] = float(w >> _S11) * _INV53
                i += 1
        block += np.uint64(1)


def stream_key(master_seed: int, replication: int) -> tuple[np.uint64, np.uint64]:
    return np.uint64(int(master_seed) & MASK64), np.uint64(int(replication) & MASK64)
