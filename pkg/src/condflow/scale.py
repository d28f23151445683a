"""Scale functions of regular diffusions by quadrature.

A scale function s is a strictly increasing solution of

    b(y) s'(y) + (1/2) a(y) s''(y) = 0,

so s'(y) = exp(-int_{y0}^{y} 2 b(v)/a(v) dv) and s is its antiderivative.
The boundary limits s(l+), s(r-) decide which ends the diffusion can reach;
we estimate them by extending the quadrature grid geometrically toward the
boundary with a tail extrapolation, and classify per the finite/infinite
pattern.  Computed scale functions are shifted so the declared normalization
holds: L pins s(l) = 0, R pins s(r) = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence, TextIO

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import QuadratureError
from .model import DiffusionSpec, Interval

__all__ = [
    "Normalization",
    "BoundaryClass",
    "GridConfig",
    "ScaleFunction",
    "compute_scale",
    "classify_boundaries",
    "exact_scale",
]


class Normalization(enum.Enum):
    L = "L"  # s(l) = 0, s > 0 on the interior
    R = "R"  # s(r) = 0, s < 0 on the interior


class BoundaryClass(enum.Enum):
    HITS_L_ONLY = "HITS_L_ONLY"    # s(l) finite, s(r) = inf
    HITS_R_ONLY = "HITS_R_ONLY"    # s(l) = -inf, s(r) finite
    HITS_BOTH = "HITS_BOTH"        # both limits finite
    UNSUPPORTED = "UNSUPPORTED"    # both limits infinite


@dataclass(frozen=True)
class GridConfig:
    """Grid span and quadrature thresholds for compute_scale.

    The master grid covers [y_min, y_max] and clusters geometrically toward
    finite interval ends.  Boundary limits are probed by extending beyond the
    span: toward a finite end the remaining gap is halved each iteration,
    toward an infinite end the reach is doubled.  A limit is declared
    infinite once the partial sums pass `divergence_threshold` with
    non-decreasing increment ratios, and finite once increments drop below
    `tail_rel` of the running scale, after which a geometric tail estimate is
    added.
    """

    y_min: float
    y_max: float
    n: int = 257
    panel_rel_tol: float = 1e-10
    tail_rel: float = 1e-10
    divergence_threshold: float = 1e8
    max_extensions: int = 500


@dataclass(frozen=True)
class ScaleFunction:
    """Grid-backed strictly increasing scale function with derivative.

    When built from a closed form, `_s_fn`/`_ds_fn` are used directly;
    otherwise evaluation interpolates the grid data with monotone cubics.
    """

    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    normalization: Normalization | None
    boundary_limits: tuple[float, float]
    label: str = ""
    _s_fn: Callable | None = None
    _ds_fn: Callable | None = None

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        d = np.asarray(self.derivs, dtype=np.float64)
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(np.diff(v) <= 0):
            raise ValueError("scale values must be strictly increasing")
        if np.any(d <= 0):
            raise ValueError("scale derivative must be positive")
        lo, hi = self.boundary_limits
        if self.normalization is Normalization.L and lo != 0.0:
            raise ValueError("normalization L requires boundary limit 0 at l")
        if self.normalization is Normalization.R and hi != 0.0:
            raise ValueError("normalization R requires boundary limit 0 at r")

    def __call__(self, y):
        if self._s_fn is not None:
            return self._s_fn(np.asarray(y, dtype=np.float64))
        return self._spline()(y)

    def deriv(self, y):
        if self._ds_fn is not None:
            return self._ds_fn(np.asarray(y, dtype=np.float64))
        return self._dspline()(y)

    def _spline(self):
        spline = getattr(self, "_spline_cache", None)
        if spline is None:
            spline = PchipInterpolator(self.grid, self.values, extrapolate=True)
            object.__setattr__(self, "_spline_cache", spline)
        return spline

    def _dspline(self):
        spline = getattr(self, "_dspline_cache", None)
        if spline is None:
            spline = PchipInterpolator(self.grid, self.derivs, extrapolate=True)
            object.__setattr__(self, "_dspline_cache", spline)
        return spline

    def scaled(self, c: float, d: float = 0.0) -> "ScaleFunction":
        """Affine image c*s + d (c > 0); drops the normalization tag."""
        if c <= 0:
            raise ValueError("c must be positive to preserve monotonicity")
        lo, hi = self.boundary_limits
        fn = self._s_fn
        dfn = self._ds_fn
        return ScaleFunction(
            grid=self.grid,
            values=c * self.values + d,
            derivs=c * self.derivs,
            normalization=None,
            boundary_limits=(c * lo + d if math.isfinite(lo) else lo,
                             c * hi + d if math.isfinite(hi) else hi),
            label=self.label,
            _s_fn=(lambda y, fn=fn: c * fn(y) + d) if fn is not None else None,
            _ds_fn=(lambda y, dfn=dfn: c * dfn(y)) if dfn is not None else None,
        )

    def to_csv(self, stream: TextIO) -> None:
        stream.write("y,s,s_prime\n")
        for y, s, ds in zip(self.grid, self.values, self.derivs):
            stream.write(f"{float(y)!r},{float(s)!r},{float(ds)!r}\n")


def exact_scale(
    s_fn: Callable,
    ds_fn: Callable,
    grid: Sequence[float],
    normalization: Normalization | None,
    boundary_limits: tuple[float, float],
    label: str = "",
) -> ScaleFunction:
    """Scale function backed by closed forms (grid data filled from them)."""
    g = np.asarray(grid, dtype=np.float64)
    return ScaleFunction(
        grid=g,
        values=np.asarray(s_fn(g), dtype=np.float64),
        derivs=np.asarray(ds_fn(g), dtype=np.float64),
        normalization=normalization,
        boundary_limits=boundary_limits,
        label=label,
        _s_fn=s_fn,
        _ds_fn=ds_fn,
    )


# --- quadrature --------------------------------------------------------------


def _simpson(f: Callable, a: float, b: float, fa: float, fb: float, rel_tol: float,
             depth: int = 0) -> float:
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_step(f, a, m, b, fa, fm, fb, whole, rel_tol, depth)


def _simpson_step(f, a, m, b, fa, fm, fb, whole, rel_tol, depth) -> float:
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth >= 40:
        return left + right
    if abs(left + right - whole) <= 15.0 * rel_tol * (abs(left + right) + 1e-300):
        return left + right + (left + right - whole) / 15.0
    half_tol = rel_tol  # relative tolerance need not shrink with the panels
    return (_simpson_step(f, a, lm, m, fa, flm, fm, left, half_tol, depth + 1)
            + _simpson_step(f, m, rm, b, fm, frm, fb, right, half_tol, depth + 1))


def _integrate(f: Callable, a: float, b: float, rel_tol: float) -> float:
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    return sign * _simpson(f, a, b, f(a), f(b), rel_tol)


def _master_grid(interval: Interval, cfg: GridConfig, y0: float) -> np.ndarray:
    lo, hi, n = cfg.y_min, cfg.y_max, cfg.n
    l, r = interval.l, interval.r
    if math.isfinite(l) and math.isfinite(r):
        mid = 0.5 * (lo + hi)
        left = l + np.geomspace(lo - l, mid - l, n // 2 + 1)
        right = r - np.geomspace(r - hi, r - mid, n - n // 2)[::-1]
        pts = np.concatenate([left, right])
    elif math.isfinite(l):
        pts = l + np.geomspace(lo - l, hi - l, n)
    elif math.isfinite(r):
        pts = r - np.geomspace(r - hi, r - lo, n)[::-1]
    else:
        pts = np.linspace(lo, hi, n)
    pts = np.unique(np.concatenate([pts, [lo, y0, hi]]))
    return pts[(pts >= lo) & (pts <= hi)]


def _limit_probe(
    phi: Callable,
    start_y: float,
    start_logsp: float,
    boundary: float,
    outward: float,
    cfg: GridConfig,
) -> float:
    """Total of int s' from start_y toward `boundary` (one side).

    `outward` is -1 toward l and +1 toward r; returns +inf on divergence.
    Raises QuadratureError if neither convergence nor divergence is detected
    within the iteration budget.
    """
    y = start_y
    logsp = start_logsp  # log s'(y) accumulated from the master grid
    total = 0.0
    increments: list[float] = []
    for _ in range(cfg.max_extensions):
        if math.isfinite(boundary):
            y_next = boundary + 0.5 * (y - boundary)
        else:
            y_next = y + outward * max(1.0, abs(y))
        def sprime(u, y=y, logsp=logsp):
            return math.exp(min(logsp - _integrate(phi, y, u, cfg.panel_rel_tol), 700.0))
        inc = abs(_integrate(sprime, y, y_next, cfg.panel_rel_tol))
        increments.append(inc)
        total += inc
        if total > cfg.divergence_threshold:
            ratios = [increments[i + 1] / increments[i]
                      for i in range(len(increments) - 1) if increments[i] > 0]
            if len(ratios) < 2 or ratios[-1] >= ratios[-2] * 0.999:
                return math.inf
        if inc <= cfg.tail_rel * max(1.0, abs(total)):
            if len(increments) >= 2 and increments[-2] > 0:
                rho = min(inc / increments[-2], 0.99)
                total += inc * rho / (1.0 - rho)
            return total
        logsp -= _integrate(phi, y, y_next, cfg.panel_rel_tol)
        y = y_next
        if math.isfinite(boundary) and abs(y - boundary) < 1e-300:
            return total
    raise QuadratureError(
        f"boundary-limit probe toward {boundary} did not settle",
        partial_sums=list(np.cumsum(increments)[-8:]),
    )


def compute_scale(
    spec: DiffusionSpec,
    y0: float,
    grid: GridConfig,
    normalization: Normalization = Normalization.L,
) -> ScaleFunction:
    """Compute the scale function of `spec` anchored at y0, then shift it so
    the declared normalization holds.

    Raises QuadratureError if the boundary-limit probe stalls, and
    ValueError if the normalization side has an infinite limit or the
    diffusion coefficient is not positive on the grid.
    """
    if not (grid.y_min < y0 < grid.y_max):
        raise ValueError("anchor y0 must lie inside [y_min, y_max]")
    if not (spec.interval.l < grid.y_min and grid.y_max < spec.interval.r):
        raise ValueError("grid must lie inside the open state interval")
    g = _master_grid(spec.interval, grid, y0)
    spec.validate_on(g)

    def phi(v: float) -> float:
        return 2.0 * float(spec.drift(v)) / float(spec.diffusion(v))

    # cumulative log s' on the master grid, anchored at y0
    j0 = int(np.searchsorted(g, y0))
    logsp = np.zeros_like(g)
    for j in range(j0, len(g) - 1):
        logsp[j + 1] = logsp[j] - _integrate(phi, g[j], g[j + 1], grid.panel_rel_tol)
    for j in range(j0, 0, -1):
        logsp[j - 1] = logsp[j] + _integrate(phi, g[j], g[j - 1], grid.panel_rel_tol) * -1.0

    # s on the master grid: integrate s'(u) = exp(logsp at panel anchor - int phi)
    values = np.zeros_like(g)
    for j in range(j0, len(g) - 1):
        anchor, lsp = g[j], logsp[j]
        def sprime(u, anchor=anchor, lsp=lsp):
            return math.exp(lsp - _integrate(phi, anchor, u, grid.panel_rel_tol))
        values[j + 1] = values[j] + _integrate(sprime, g[j], g[j + 1], grid.panel_rel_tol)
    for j in range(j0, 0, -1):
        anchor, lsp = g[j], logsp[j]
        def sprime(u, anchor=anchor, lsp=lsp):
            return math.exp(lsp - _integrate(phi, anchor, u, grid.panel_rel_tol))
        values[j - 1] = values[j] - _integrate(sprime, g[j - 1], g[j], grid.panel_rel_tol)

    drop_l = _limit_probe(phi, float(g[0]), float(logsp[0]), spec.interval.l, -1.0, grid)
    gain_r = _limit_probe(phi, float(g[-1]), float(logsp[-1]), spec.interval.r, +1.0, grid)
    lim_l = values[0] - drop_l if math.isfinite(drop_l) else -math.inf
    lim_r = values[-1] + gain_r if math.isfinite(gain_r) else math.inf

    if normalization is Normalization.L:
        if not math.isfinite(lim_l):
            raise ValueError(f"cannot L-normalize {spec.label or 'spec'}: s(l) = -inf")
        shift = lim_l
    else:
        if not math.isfinite(lim_r):
            raise ValueError(f"cannot R-normalize {spec.label or 'spec'}: s(r) = +inf")
        shift = lim_r
    values = values - shift
    lim_l = lim_l - shift if math.isfinite(lim_l) else lim_l
    lim_r = lim_r - shift if math.isfinite(lim_r) else lim_r
    # pin the normalized side to exactly zero
    if normalization is Normalization.L:
        lim_l = 0.0
    else:
        lim_r = 0.0

    return ScaleFunction(
        grid=g,
        values=values,
        derivs=np.exp(logsp),
        normalization=normalization,
        boundary_limits=(lim_l, lim_r),
        label=spec.label,
    )


def classify_boundaries(s: ScaleFunction) -> BoundaryClass:
    """Which interval ends the diffusion reaches, read off the scale limits."""
    lim_l, lim_r = s.boundary_limits
    finite_l = math.isfinite(lim_l)
    finite_r = math.isfinite(lim_r)
    if finite_l and not finite_r:
        return BoundaryClass.HITS_L_ONLY
    if not finite_l and finite_r:
        return BoundaryClass.HITS_R_ONLY
    if finite_l and finite_r:
        return BoundaryClass.HITS_BOTH
    return BoundaryClass.UNSUPPORTED
