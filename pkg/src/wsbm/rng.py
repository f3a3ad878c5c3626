"""Counter-based random numbers keyed by node pair.

Implements Philox4x64-10 (Salmon et al., "Parallel random numbers: as easy
as 1, 2, 3", SC 2011), the same bijection numpy exposes as
``numpy.random.Philox``.  Because output is a pure function of
``(key, counter)``, every edge ``(i, j)`` can be drawn from its own
substream with no sequential state, so draws do not depend on iteration
order or thread count.

Stream layout: key = ``(seed, DOMAIN)``, counter = ``(i, j, stream, 0)``,
where ``stream`` separates label draws from edge draws.
"""

import numpy as np

from ._accel import njit, resolve_backend

PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
PHILOX_M1 = np.uint64(0xCA5A826395121157)
PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)
ROUNDS = 10

DOMAIN = 0x5742534D  # second key word, fixed for this package
STREAM_EDGE = 0
STREAM_LABEL = 1

_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
# 52 bits keep (k + 0.5) exact in float64, so 1.0 is never produced
_S12 = np.uint64(12)
_TWO_M52 = 2.0**-52


def _mulhilo_np(a, b):
    """64x64 -> 128 bit product as (hi, lo), elementwise on uint64 arrays."""
    a_lo, a_hi = a & _MASK32, a >> _S32
    b_lo, b_hi = b & _MASK32, b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _S32) + (lh & _MASK32) + (hl & _MASK32)
    hi = hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    lo = a * b
    return hi, lo


def _philox_numpy(ctr, key):
    c0, c1, c2, c3 = (ctr[:, k].copy() for k in range(4))
    k0, k1 = np.uint64(key[0]), np.uint64(key[1])
    with np.errstate(over="ignore"):
        for rnd in range(ROUNDS):
            if rnd:
                k0 = np.uint64(k0 + PHILOX_W0)
                k1 = np.uint64(k1 + PHILOX_W1)
            hi0, lo0 = _mulhilo_np(PHILOX_M0, c0)
            hi1, lo1 = _mulhilo_np(PHILOX_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return np.stack([c0, c1, c2, c3], axis=1)


@njit(cache=True)
def _mulhilo_nb(a, b):
    mask = np.uint64(0xFFFFFFFF)
    s32 = np.uint64(32)
    a_lo = a & mask
    a_hi = a >> s32
    b_lo = b & mask
    b_hi = b >> s32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> s32) + (lh & mask) + (hl & mask)
    hi = hh + (lh >> s32) + (hl >> s32) + (mid >> s32)
    return hi, a * b


@njit(cache=True)
def _philox_numba(ctr, key):
    m0 = np.uint64(0xD2E7470EE14C6C93)
    m1 = np.uint64(0xCA5A826395121157)
    w0 = np.uint64(0x9E3779B97F4A7C15)
    w1 = np.uint64(0xBB67AE8584CAA73B)
    out = np.empty_like(ctr)
    for row in range(ctr.shape[0]):
        c0 = ctr[row, 0]
        c1 = ctr[row, 1]
        c2 = ctr[row, 2]
        c3 = ctr[row, 3]
        k0 = key[0]
        k1 = key[1]
        for rnd in range(10):
            if rnd > 0:
                k0 = k0 + w0
                k1 = k1 + w1
            hi0, lo0 = _mulhilo_nb(m0, c0)
            hi1, lo1 = _mulhilo_nb(m1, c2)
            n0 = hi1 ^ c1 ^ k0
            n2 = hi0 ^ c3 ^ k1
            c0 = n0
            c1 = lo1
            c2 = n2
            c3 = lo0
        out[row, 0] = c0
        out[row, 1] = c1
        out[row, 2] = c2
        out[row, 3] = c3
    return out


def philox4x64(counters, key, backend=None) -> np.ndarray:
    """Apply the Philox4x64-10 bijection to each row of ``counters``.

    Parameters
    ----------
    counters : array_like of uint64, shape (m, 4)
    key : array_like of uint64, shape (2,)
    backend : {"numba", "numpy"}, optional

    Returns
    -------
    ndarray of uint64, shape (m, 4)
    """
    ctr = np.ascontiguousarray(np.asarray(counters, dtype=np.uint64).reshape(-1, 4))
    k = np.ascontiguousarray(np.asarray(key, dtype=np.uint64).reshape(2))
    if resolve_backend(backend) == "numba":
        return _philox_numba(ctr, k)
    return _philox_numpy(ctr, k)


def _seed_key(seed) -> np.ndarray:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return np.array([seed, DOMAIN], dtype=np.uint64)


def to_unit_interval(words) -> np.ndarray:
    """Map uint64 words to doubles strictly inside (0, 1) using the top 52 bits."""
    return ((np.asarray(words, dtype=np.uint64) >> _S12).astype(np.float64) + 0.5) * _TWO_M52


def keyed_uniforms(seed, i, j, stream=STREAM_EDGE, backend=None) -> np.ndarray:
    """One uniform in (0, 1) per index pair ``(i[k], j[k])`` under ``seed``."""
    i = np.asarray(i, dtype=np.uint64).ravel()
    j = np.asarray(j, dtype=np.uint64).ravel()
    ctr = np.zeros((i.size, 4), dtype=np.uint64)
    ctr[:, 0] = i
    ctr[:, 1] = j
    ctr[:, 2] = np.uint64(stream)
    return to_unit_interval(philox4x64(ctr, _seed_key(seed), backend=backend)[:, 0])
