"""Deterministic counter-based random streams for reproducible Monte Carlo.

Each walker owns an independent stream keyed by ``(seed, walker_index)``, and
every draw is a pure function of ``(stream key, draw index)``.  There is no
mutable generator state, so results are bit-identical whether walkers run one
at a time or in vectorized batches, and independent of scheduling order.

The generator is the splitmix64 finalizer applied to a Weyl sequence, a
standard construction for counter-based streams.  All arithmetic is modulo
2**64 by design; the ``errstate`` guards silence NumPy's overflow warnings for
the intentional wraparound.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 1.0 / float(1 << 53)


def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer (xor-shift-multiply avalanche) on uint64 arrays."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX_1
        z = (z ^ (z >> np.uint64(27))) * _MIX_2
        return z ^ (z >> np.uint64(31))


def stream_keys(seed: int, walker_indices) -> np.ndarray:
    """Independent uint64 stream key for each walker index under one seed."""
    w = np.atleast_1d(np.asarray(walker_indices, dtype=np.uint64))
    with np.errstate(over="ignore"):
        return _mix(np.uint64(seed & _U64_MASK) ^ _mix((w + np.uint64(1)) * _GOLDEN))


def uniform(keys: np.ndarray, draw_index) -> np.ndarray:
    """Draw ``draw_index`` of each stream, uniform on [0, 1) with 53-bit mantissa."""
    keys = np.asarray(keys, dtype=np.uint64)
    idx = np.asarray(draw_index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix(keys + (idx + np.uint64(1)) * _GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


def draws_per_step(dim: int) -> int:
    """Uniform draws one sphere direction consumes (fixed per dimension).

    A fixed budget per step keeps draw indices aligned across walkers, which is
    what makes single-walk and batched runs bit-identical.
    """
    if dim == 2:
        return 1
    if dim == 3:
        return 2
    return 2 * ((dim + 1) // 2)


def sphere_directions(keys: np.ndarray, base_index: int, dim: int) -> np.ndarray:
    """One uniform unit vector per stream.

    Consumes draws ``base_index .. base_index + draws_per_step(dim) - 1`` of
    each stream: the angle itself in 2-D, (cos polar, azimuth) in 3-D, and
    Box-Muller normal pairs (then normalization) in higher dimensions.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    n = keys.shape[0]
    if dim == 2:
        theta = (2.0 * np.pi) * uniform(keys, base_index)
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if dim == 3:
        c = 2.0 * uniform(keys, base_index) - 1.0
        phi = (2.0 * np.pi) * uniform(keys, base_index + 1)
        s = np.sqrt(np.maximum(0.0, 1.0 - c * c))
        return np.stack([s * np.cos(phi), s * np.sin(phi), c], axis=1)
    pairs = (dim + 1) // 2
    g = np.empty((n, 2 * pairs))
    for j in range(pairs):
        u1 = uniform(keys, base_index + 2 * j)
        u2 = uniform(keys, base_index + 2 * j + 1)
        r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 in (0, 1], so the log is finite
        w = (2.0 * np.pi) * u2
        g[:, 2 * j] = r * np.cos(w)
        g[:, 2 * j + 1] = r * np.sin(w)
    v = g[:, :dim]
    norms = np.linalg.norm(v, axis=1)
    # A zero Gaussian vector has probability ~0; fall back to a fixed axis.
    degenerate = norms < 1e-14
    if np.any(degenerate):
        v[degenerate] = 0.0
        v[degenerate, 0] = 1.0
        norms[degenerate] = 1.0
    return v / norms[:, None]
