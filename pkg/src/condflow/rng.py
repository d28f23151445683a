"""Counter-based random numbers for reproducible parallel Monte Carlo.

Every draw is a pure function of (seed, path_index, step_index, stream), so a
path's noise does not depend on how paths are batched or scheduled across
workers.  There is no shared mutable generator state anywhere.

The mixer is the splitmix64 finalizer (two xor-shift/multiply rounds), applied
twice: once to fold the step/stream counter, once to fold the per-path key.
Uniforms take the top 53 bits; normals go through the inverse normal CDF.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

__all__ = [
    "STREAM_STEP_NORMAL",
    "STREAM_BRIDGE",
    "STREAM_WALK",
    "path_keys",
    "uniforms",
    "normals",
]

# Distinct purposes draw from distinct streams so adding a draw site never
# perturbs the others.
STREAM_STEP_NORMAL = 0
STREAM_BRIDGE = 1      # stream id: STREAM_BRIDGE + watch-level index
STREAM_WALK = 64       # lattice-walk uniforms

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MULT_A = np.uint64(0xBF58476D1CE4E5B9)
_MULT_B = np.uint64(0x94D049BB133111EB)
_SEED_SALT = np.uint64(0x2545F4914F6CDD1D)

_U64_INV = 2.0 ** -53
_U64_HALF = 2.0 ** -54


def _mix64(x: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    x = x + _GAMMA
    x = (x ^ (x >> np.uint64(30))) * _MULT_A
    x = (x ^ (x >> np.uint64(27))) * _MULT_B
    return x ^ (x >> np.uint64(31))


def path_keys(seed: int, path_indices: np.ndarray) -> np.ndarray:
    """Per-path 64-bit keys derived from the run seed.

    `path_indices` is an integer array; the result can be cached and reused
    for every step of those paths.
    """
    with np.errstate(over="ignore"):
        s = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _SEED_SALT)
        return _mix64(s + np.asarray(path_indices, dtype=np.uint64) * _GAMMA)


def _raw(keys: np.ndarray, step_index: int, stream: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        c = _mix64(np.uint64(step_index) * _GAMMA + np.uint64(stream))
        return _mix64(keys + c)


def uniforms(keys: np.ndarray, step_index: int, stream: int) -> np.ndarray:
    """Uniform(0,1) draws, one per key; never exactly 0 or 1."""
    bits = _raw(keys, step_index, stream)
    return (bits >> np.uint64(11)).astype(np.float64) * _U64_INV + _U64_HALF


def normals(keys: np.ndarray, step_index: int, stream: int = STREAM_STEP_NORMAL) -> np.ndarray:
    """Standard-normal draws via the inverse CDF of the uniform stream."""
    return ndtri(uniforms(keys, step_index, stream))
