"""Counter-addressed 64-bit block generator behind every random bit.

The whole package draws its randomness from one fixed, seedable
construction: block ``i`` of the stream keyed by ``seed`` is

    block_at(seed, i) = mix64(seed + (i + 1) * GOLDEN)   (mod 2**64)

where ``mix64`` is the SplitMix64 finalizer (Steele, Lea & Flood's
constants, as popularised by Vigna).  This is the SplitMix64 sequence
with random access: any block is computable in O(1) from ``(seed, i)``,
which makes tapes replayable and lets batched samplers reproduce the
scalar bit stream exactly.

Independent sub-streams come from ``split_seed(seed, i)``, a
domain-separated double mix.  Scalar functions operate on Python ints;
the ``*_np`` twins operate on ``uint64`` arrays and are bit-for-bit
identical (asserted in the test suite).
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
SPLIT_KEY = 0xD2B74407B1CE6E93


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijective avalanche mix of a 64-bit word."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def block_at(seed: int, index: int) -> int:
    """64 fair bits: block ``index`` of the stream keyed by ``seed``."""
    return mix64((seed + (index + 1) * GOLDEN) & MASK64)


def split_seed(seed: int, index: int) -> int:
    """Seed of the ``index``-th sub-stream of ``seed``.

    Distinct indices give statistically independent streams, and
    sub-streams are independent of the parent's own blocks (the split
    is keyed away from ``block_at`` by ``SPLIT_KEY``).
    """
    base = mix64((seed ^ SPLIT_KEY) & MASK64)
    return mix64((base + (index + 1) * GOLDEN) & MASK64)


def bernoulli_threshold(p: float) -> int:
    """Integer threshold t such that (block >> 11) < t holds w.p. p.

    Draws compare the top 53 bits of a block against ``ceil(p * 2**53)``,
    i.e. a Bernoulli(p) trial uses one block and the canonical 53-bit
    dyadic uniform.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p!r}")
    return math.ceil(p * (1 << 53))


# ---------------------------------------------------------------------------
# numpy twins.  Constants are wrapped in np.uint64 so arithmetic stays in
# uint64 and wraps mod 2**64 (never silently promotes to float).

_U = np.uint64
_GOLDEN_U = _U(GOLDEN)
_SPLIT_KEY_U = _U(SPLIT_KEY)
_M1 = _U(0xBF58476D1CE4E5B9)
_M2 = _U(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = _U(30), _U(27), _U(31), _U(11)
_ONE = _U(1)


def mix64_np(z: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps mod 2**64 by design; silence the overflow
    # warnings numpy raises for 0-d operands.
    with np.errstate(over="ignore"):
        z = z.astype(np.uint64, copy=True)
        z ^= z >> _S30
        z *= _M1
        z ^= z >> _S27
        z *= _M2
        z ^= z >> _S31
        return z


def blocks_np(seeds, indices) -> np.ndarray:
    """Vectorised ``block_at``; ``seeds`` and ``indices`` broadcast."""
    s = np.asarray(seeds, dtype=np.uint64)
    i = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_np(s + (i + _ONE) * _GOLDEN_U)


def split_seed_np(seeds, indices) -> np.ndarray:
    """Vectorised ``split_seed``; ``seeds`` and ``indices`` broadcast."""
    s = np.asarray(seeds, dtype=np.uint64)
    i = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = mix64_np(s ^ _SPLIT_KEY_U)
        return mix64_np(base + (i + _ONE) * _GOLDEN_U)


def bern_np(blocks: np.ndarray, threshold: int) -> np.ndarray:
    """Bernoulli trials from blocks, matching ``RandomTape.bernoulli``."""
    return (blocks >> _S11) < _U(threshold)


def lemire_np(blocks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform integers in [0, n) from blocks, matching ``randint``.

    Returns ``(values, ok)``: lanes with ``ok`` False hit the Lemire
    rejection (probability n / 2**64) and must redraw.  Requires
    n < 2**32 so the 128-bit product fits in uint64 halves.
    """
    if not 0 < n < (1 << 32):
        raise ValueError("lemire_np supports 1 <= n < 2**32")
    n_u = _U(n)
    lo32 = blocks & _U(0xFFFFFFFF)
    hi32 = blocks >> _U(32)
    low64 = ((hi32 * n_u) << _U(32)) + lo32 * n_u
    values = ((hi32 * n_u + ((lo32 * n_u) >> _U(32))) >> _U(32)).astype(np.int64)
    ok = low64 >= _U((-n) % n)
    return values, ok


def uniform53_np(blocks: np.ndarray) -> np.ndarray:
    """uniform [0,1) doubles from blocks, matching ``RandomTape.uniform53``."""
    return (blocks >> _S11).astype(np.float64) * 2.0**-53
