"""Conditioned (h-transformed) dynamics and numeric generator checks.

Dividing the generator's action on s*phi by s leaves the diffusion
coefficient alone and adds a drift of a*s'/s: positive under upward
conditioning (s > 0), negative under downward conditioning (s < 0).  The
generator itself is applied with central finite differences, so identity
checks carry a known O(h^2) error law.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import DiffusionSpec
from .scale import Normalization, ScaleFunction

__all__ = [
    "Direction",
    "TransformedSpec",
    "transform",
    "downward_scale",
    "apply_generator",
    "check_generator_identity",
]


class Direction(enum.Enum):
    UPWARD = "UPWARD"      # condition toward r; needs normalization L, s > 0
    DOWNWARD = "DOWNWARD"  # condition toward l; needs normalization R, s < 0


@dataclass(frozen=True)
class TransformedSpec:
    """A base diffusion together with its conditioned dynamics."""

    base: DiffusionSpec
    scale: ScaleFunction
    direction: Direction
    result: DiffusionSpec


def transform(spec: DiffusionSpec, s: ScaleFunction, direction: Direction) -> TransformedSpec:
    """Conditioned dynamics: drift gains a*s'/s, diffusion is unchanged.

    Upward conditioning requires an L-normalized (positive) scale, downward
    an R-normalized (negative) one; a scale vanishing on the grid interior is
    rejected.
    """
    values = np.asarray(s.values)
    if direction is Direction.UPWARD:
        if s.normalization is not Normalization.L:
            raise ValueError("UPWARD transform needs an L-normalized scale")
        if np.any(values <= 0):
            raise ValueError("UPWARD transform needs s > 0 on the grid")
    else:
        if s.normalization is not Normalization.R:
            raise ValueError("DOWNWARD transform needs an R-normalized scale")
        if np.any(values >= 0):
            raise ValueError("DOWNWARD transform needs s < 0 on the grid")

    def drift(y, _spec=spec, _s=s):
        return _spec.drift(y) + _spec.diffusion(y) * _s.deriv(y) / _s(y)

    suffix = "up" if direction is Direction.UPWARD else "down"
    result = DiffusionSpec(
        interval=spec.interval,
        drift=drift,
        diffusion=spec.diffusion,
        label=f"{spec.label}^{suffix}" if spec.label else suffix,
    )
    return TransformedSpec(base=spec, scale=s, direction=direction, result=result)


def downward_scale(s: ScaleFunction) -> ScaleFunction:
    """Scale of the upward-conditioned process: -1/s, derivative s'/s^2.

    Requires an L-normalized input (s > 0).  When s(r) = inf the result is
    R-normalized with limit 0 at r; for finite s(r) no normalization tag is
    set (the image of the r-limit is then nonzero).
    """
    if s.normalization is not Normalization.L:
        raise ValueError("downward_scale expects an L-normalized scale")
    values = np.asarray(s.values)
    if np.any(values <= 0):
        raise ValueError("scale must be positive on the grid")
    lim_l, lim_r = s.boundary_limits
    new_lim_r = 0.0 if lim_r == math.inf else -1.0 / lim_r
    fn = s._s_fn
    dfn = s._ds_fn
    return ScaleFunction(
        grid=s.grid,
        values=-1.0 / values,
        derivs=np.asarray(s.derivs) / values**2,
        normalization=Normalization.R if lim_r == math.inf else None,
        boundary_limits=(-math.inf, new_lim_r),
        label=f"-1/({s.label})" if s.label else "",
        _s_fn=(lambda y, fn=fn: -1.0 / fn(y)) if fn is not None else None,
        _ds_fn=(lambda y, fn=fn, dfn=dfn: dfn(y) / fn(y) ** 2)
        if (fn is not None and dfn is not None) else None,
    )


def apply_generator(spec: DiffusionSpec, f: Callable, y, h: float):
    """b(y) f'(y) + (1/2) a(y) f''(y) with central differences of step h.

    `f` may be a CoeffExpr or any callable accepting arrays; `y` may be a
    scalar or an array, and y +/- h must stay inside the open interval.
    """
    if h <= 0:
        raise ValueError("difference step h must be positive")
    ys = np.asarray(y, dtype=np.float64)
    lo, hi = spec.interval.l, spec.interval.r
    if np.any(ys - h <= lo) or np.any(ys + h >= hi):
        raise ValueError("difference stencil leaves the open interval")
    f_plus = np.asarray(f(ys + h), dtype=np.float64)
    f_minus = np.asarray(f(ys - h), dtype=np.float64)
    f_mid = np.asarray(f(ys), dtype=np.float64)
    first = (f_plus - f_minus) / (2.0 * h)
    second = (f_plus - 2.0 * f_mid + f_minus) / (h * h)
    out = spec.drift(ys) * first + 0.5 * spec.diffusion(ys) * second
    return float(out) if np.ndim(y) == 0 else out


def check_generator_identity(
    spec: DiffusionSpec,
    s: ScaleFunction,
    phi: Callable,
    grid,
    h: float | None = None,
    direction: Direction = Direction.UPWARD,
) -> float:
    """Max abs difference over the grid between (1/s) L[s*phi] and the
    transformed generator applied to phi."""
    grid = np.asarray(grid, dtype=np.float64)
    if h is None:
        h = 1e-4 * (grid[-1] - grid[0])

    def s_phi(y):
        return np.asarray(s(y)) * np.asarray(phi(y))

    lhs = apply_generator(spec, s_phi, grid, h) / np.asarray(s(grid))
    rhs = apply_generator(transform(spec, s, direction).result, phi, grid, h)
    return float(np.max(np.abs(lhs - rhs)))
