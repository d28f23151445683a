"""Path simulation with absorbing boundaries and hitting detection.

Scheme: Euler-Maruyama on a fixed step grid, one standard normal per path
per step from the counter-based generator, so a path is a pure function of
(seed, path_index) no matter how paths are chunked or threaded.

Level crossings between grid points are recovered with the Brownian-bridge
crossing probability exp(-2 (level-y0)(level-y1) / (a(y0) dt)), with the
diffusion coefficient frozen at the step's left endpoint; detected hits are
reported at the step's right endpoint.  A crossing of both watched levels
detected on the same step counts toward the upper level; such ties are
counted and reported.

Two guards keep singular drifts honest near a boundary the process cannot
actually reach (for example the 1/y drift of an upward-conditioned process
at its lower end).  When the drift at the current point pushes away from a
boundary: (a) a proposal overshooting that boundary is retried with the step
halved, same normal draw, up to a bounded number of times, and (b) the
bridge absorption test at that boundary is skipped, because the frozen-
coefficient bridge law is badly wrong there.  At a boundary the drift does
not repel from, an overshoot is genuine absorption: the value is clamped to
the boundary and the path frozen.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng
from .errors import EvalDomainError
from .model import NEVER, DiffusionSpec, HittingRecord, McEstimate, PathSample

__all__ = [
    "SimConfig",
    "EnsembleResult",
    "simulate_path",
    "simulate_ensemble",
    "estimate_hitting_prob",
]

_STREAM_NORMAL = rng.STREAM_STEP_NORMAL
_STREAM_BRIDGE_L = 1
_STREAM_BRIDGE_R = 2
_STREAM_WATCH = 3


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    `dt_schedule` optionally coarsens the step after an accurate early
    phase for long-horizon scenarios: (t_until, dt) segments covering the
    horizon; when absent a single segment (horizon, dt) is used.  Snapshot
    times record the path value at t AND stop, i.e. frozen at absorption, at
    cap exceedance or, when `stop_at_first_hit` is set, at the first
    watched-level crossing.
    """

    dt: float
    horizon: float
    cap: float = 1e8
    bridge_correction: bool = True
    watch_levels: tuple[float, ...] = ()
    seed: int = 0
    n_paths: int = 1
    dt_schedule: tuple[tuple[float, float], ...] | None = None
    snapshot_times: tuple[float, ...] = ()
    track_time_average: bool = False
    stop_at_first_hit: bool = False
    stop_levels: tuple[float, ...] | None = None  # default: every watch level
    n_threads: int | None = None
    boundary_clamp: float = 1e-12
    max_halvings: int = 20
    chunk_size: int = 16384

    def __post_init__(self):
        if self.dt <= 0 or self.horizon <= 0 or self.dt >= self.horizon:
            raise ValueError("need 0 < dt < horizon")
        if self.cap <= 0 or self.n_paths <= 0:
            raise ValueError("cap and n_paths must be positive")
        for t in self.snapshot_times:
            if not 0.0 < t <= self.horizon:
                raise ValueError("snapshot times must lie in (0, horizon]")

    def threads(self) -> int:
        if self.n_threads is not None:
            return max(1, self.n_threads)
        env = os.environ.get("CONDFLOW_THREADS", "")
        return max(1, int(env)) if env.isdigit() and env else 1


@dataclass
class EnsembleResult:
    """Per-path summaries of one Monte Carlo ensemble (index = path_index)."""

    n: int
    final_values: np.ndarray
    stop_times: np.ndarray          # absorption/cap/first-hit time; horizon if truncated
    absorbed_at: np.ndarray         # boundary value, +inf for cap exceedance, nan otherwise
    truncated: np.ndarray           # still running at the horizon
    hit_times: dict[float, np.ndarray] = field(default_factory=dict)   # nan = never
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)   # value at t ^ stop
    time_integral: np.ndarray | None = None
    tie_count: int = 0

    def truncated_fraction(self) -> float:
        return float(np.mean(self.truncated))

    def summary(self) -> dict:
        return {
            "n": self.n,
            "hits": {repr(float(level)): int(np.sum(np.isfinite(t)))
                     for level, t in self.hit_times.items()},
            "absorbed": int(np.sum(np.isfinite(self.absorbed_at))),
            "truncated": int(np.sum(self.truncated)),
        }


def _phases(cfg: SimConfig) -> list[tuple[int, float]]:
    segments = cfg.dt_schedule if cfg.dt_schedule else ((cfg.horizon, cfg.dt),)
    phases = []
    t = 0.0
    for t_until, dt in segments:
        t_until = min(t_until, cfg.horizon)
        if t_until <= t + 1e-12:
            continue
        n_steps = max(1, int(round((t_until - t) / dt)))
        phases.append((n_steps, dt))
        t += n_steps * dt
        if t >= cfg.horizon - 1e-12:
            break
    if t < cfg.horizon - 1e-12:
        dt = segments[-1][1]
        phases.append((max(1, int(round((cfg.horizon - t) / dt))), dt))
    return phases


def _coeffs(spec: DiffusionSpec, xa: np.ndarray, ids: np.ndarray, t: float):
    try:
        b = np.asarray(spec.drift(xa), dtype=np.float64)
        a = np.asarray(spec.diffusion(xa), dtype=np.float64)
    except Exception as exc:
        raise EvalDomainError(f"coefficient evaluation failed at t={t}: {exc}") from exc
    bad = ~(np.isfinite(b) & np.isfinite(a) & (a > 0))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EvalDomainError(
            f"coefficient failure on path {int(ids[i])} at t={t}, y={float(xa[i])}")
    return b, a


def _simulate_chunk(spec: DiffusionSpec, x0: float, cfg: SimConfig,
                    idx_lo: int, idx_hi: int, trajectory: bool = False):
    n = idx_hi - idx_lo
    ids = np.arange(idx_lo, idx_hi, dtype=np.int64)
    keys = rng.path_keys(cfg.seed, ids)
    l, r = spec.interval.l, spec.interval.r
    clamp = cfg.boundary_clamp
    watch = tuple(cfg.watch_levels)
    # watch levels sitting on an absorbing boundary share its crossing events
    on_boundary = {level: (level == l or level == r) for level in watch}
    interior = [level for level in watch if not on_boundary[level]]
    watch_stream = {level: j for j, level in enumerate(watch)}
    stop_set = set(watch if cfg.stop_levels is None else cfg.stop_levels)
    # higher level wins a same-step tie; process candidates from the top
    interior_desc = sorted((lv for lv in interior if lv in stop_set), reverse=True)

    x = np.full(n, float(x0))
    final = np.full(n, float(x0))
    stop_t = np.full(n, np.nan)
    absorbed = np.full(n, np.nan)
    hit_t = {level: np.full(n, np.nan) for level in watch}
    snap_pending = sorted(cfg.snapshot_times)
    snaps = {t: np.full(n, np.nan) for t in snap_pending}
    tint = np.zeros(n) if cfg.track_time_average else None
    tie_count = 0

    for level in watch:  # a watch level equal to the start is hit at time 0
        if level == x0:
            hit_t[level][:] = 0.0

    active = np.arange(n)
    if cfg.stop_at_first_hit and any(level == x0 for level in stop_set):
        stop_t[:] = 0.0
        active = active[:0]

    traj_t = traj_x = None
    if trajectory:
        total_steps = sum(ns for ns, _ in _phases(cfg))
        traj_t = np.zeros(total_steps + 1)
        traj_x = np.full(total_steps + 1, float(x0))

    t = 0.0
    k = 0  # global step index, the RNG counter
    snap_i = 0
    all_phases = _phases(cfg)
    horizon = sum(ns * dt for ns, dt in all_phases)
    for n_steps, dt in all_phases:
        sqrt_dt = math.sqrt(dt)
        for _ in range(n_steps):
            if not active.size and not trajectory:
                t = horizon
                break
            t_next = t + dt
            if active.size:
                xa = x[active]
                z = rng.normals(keys[active], k, _STREAM_NORMAL)
                b, a = _coeffs(spec, xa, ids[active], t)
                prop = xa + b * dt + np.sqrt(a) * sqrt_dt * z

                # halving guard at boundaries the drift repels from
                for boundary, side in ((l, -1.0), (r, 1.0)):
                    if not math.isfinite(boundary):
                        continue
                    fix = ((prop - boundary) * side > clamp) & (b * side < 0)
                    if np.any(fix):
                        sub = np.where(fix)[0]
                        h = dt
                        for _halving in range(cfg.max_halvings):
                            h *= 0.5
                            prop[sub] = xa[sub] + b[sub] * h + np.sqrt(a[sub] * h) * z[sub]
                            sub = sub[(prop[sub] - boundary) * side > clamp]
                            if sub.size == 0:
                                break
                        if sub.size:
                            prop[sub] = boundary  # give up: absorb there

                # boundary absorption (discrete overshoot or bridge crossing)
                absorb = {}
                for boundary, side, stream in ((l, -1.0, _STREAM_BRIDGE_L),
                                               (r, 1.0, _STREAM_BRIDGE_R)):
                    if not math.isfinite(boundary):
                        continue
                    crossed = (prop - boundary) * side >= -clamp
                    if cfg.bridge_correction:
                        same_side = ~crossed & ((xa - boundary) * side < 0) & ~(b * side < 0)
                        if np.any(same_side):
                            gap = (boundary - xa) * (boundary - prop)
                            with np.errstate(over="ignore", invalid="ignore"):
                                p = np.where(same_side, np.exp(-2.0 * gap / (a * dt)), 0.0)
                            live = p > 1e-16
                            if np.any(live):
                                u = rng.uniforms(keys[active], k, stream)
                                crossed = crossed | (live & (u < p))
                    absorb[boundary] = crossed

                absorb_l = absorb.get(l, np.zeros(active.size, dtype=bool))
                absorb_r = absorb.get(r, np.zeros(active.size, dtype=bool))
                any_absorb = absorb_l | absorb_r
                capped = (prop >= cfg.cap) & ~any_absorb

                # interior watched levels: discrete or bridge crossings
                cross = {}
                for level in interior:
                    j = watch_stream[level]
                    unhit = ~np.isfinite(hit_t[level][active])
                    crossed = unhit & ((xa - level) * (prop - level) <= 0.0)
                    if cfg.bridge_correction:
                        maybe = unhit & ~crossed
                        if np.any(maybe):
                            gap = (level - xa) * (level - prop)
                            with np.errstate(over="ignore", invalid="ignore"):
                                p = np.where(maybe, np.exp(-2.0 * gap / (a * dt)), 0.0)
                            live = p > 1e-16
                            if np.any(live):
                                u = rng.uniforms(keys[active], k, _STREAM_WATCH + j)
                                crossed = crossed | (live & (u < p))
                    cross[level] = crossed

                # record first-crossing times (boundary-sitting levels follow absorption)
                n_events = any_absorb.astype(np.int64) + capped.astype(np.int64)
                for level in interior:
                    n_events += cross[level].astype(np.int64)
                tie_count += int(np.sum(n_events >= 2))
                for level in interior:
                    if np.any(cross[level]):
                        sel = active[cross[level]]
                        hit_t[level][sel] = t_next
                for level in watch:
                    if on_boundary[level]:
                        fired = absorb[level] & ~np.isfinite(hit_t[level][active])
                        if np.any(fired):
                            hit_t[level][active[fired]] = t_next

                # stopping: absorption and cap always stop; watched levels
                # stop only in stop_at_first_hit mode (upper level wins ties)
                stop_value = np.where(absorb_l, l, np.where(absorb_r, r, prop))
                stopping = any_absorb | capped
                if cfg.stop_at_first_hit:
                    for level in interior_desc:
                        newly = cross[level] & ~stopping
                        stop_value = np.where(newly, level, stop_value)
                        stopping = stopping | newly

                if np.any(stopping):
                    sel = active[stopping]
                    val = stop_value[stopping]
                    final[sel] = val
                    stop_t[sel] = t_next
                    absorbed[sel] = np.where(absorb_l[stopping], l,
                                             np.where(absorb_r[stopping], r,
                                                      np.where(capped[stopping], math.inf, np.nan)))
                    for col in snaps.values():
                        unset = np.isnan(col[sel])
                        col[sel[unset]] = val[unset]

                if tint is not None:
                    tint[active] += xa * dt

                if math.isfinite(l):
                    np.maximum(prop, l, out=prop)
                if math.isfinite(r):
                    np.minimum(prop, r, out=prop)
                x[active] = np.where(stopping, stop_value, prop)
                active = active[~stopping]

            t = t_next
            k += 1
            if trajectory:
                traj_t[k] = t
                traj_x[k] = x[0]
            while snap_i < len(snap_pending) and t >= snap_pending[snap_i] - 1e-12:
                col = snaps[snap_pending[snap_i]]
                col[active] = x[active]
                snap_i += 1

    truncated = np.zeros(n, dtype=bool)
    truncated[active] = True
    final[active] = x[active]
    stop_t[active] = t
    stop_t[np.isnan(stop_t)] = t
    for col in snaps.values():
        still = np.isnan(col)
        col[still] = final[still]

    result = EnsembleResult(
        n=n,
        final_values=final,
        stop_times=stop_t,
        absorbed_at=absorbed,
        truncated=truncated,
        hit_times=hit_t,
        snapshots=snaps,
        time_integral=tint,
        tie_count=tie_count,
    )
    return (result, (traj_t, traj_x)) if trajectory else result


def _merge(chunks: list[EnsembleResult]) -> EnsembleResult:
    cat = np.concatenate
    return EnsembleResult(
        n=sum(c.n for c in chunks),
        final_values=cat([c.final_values for c in chunks]),
        stop_times=cat([c.stop_times for c in chunks]),
        absorbed_at=cat([c.absorbed_at for c in chunks]),
        truncated=cat([c.truncated for c in chunks]),
        hit_times={level: cat([c.hit_times[level] for c in chunks])
                   for level in chunks[0].hit_times},
        snapshots={t: cat([c.snapshots[t] for c in chunks])
                   for t in chunks[0].snapshots},
        time_integral=(cat([c.time_integral for c in chunks])
                       if chunks[0].time_integral is not None else None),
        tie_count=sum(c.tie_count for c in chunks),
    )


def simulate_ensemble(spec: DiffusionSpec, x0: float, cfg: SimConfig) -> EnsembleResult:
    """Simulate cfg.n_paths paths and return per-path summaries.

    Chunk boundaries are fixed by cfg.chunk_size, never by the worker count,
    and each chunk is a pure function of (seed, index range), so the merged
    result is identical for any number of threads.
    """
    if not spec.interval.contains(x0):
        raise ValueError(f"x0={x0} outside the open interval")
    for level in cfg.watch_levels:
        if not (spec.interval.l <= level <= spec.interval.r):
            raise ValueError(f"watch level {level} outside [l, r]")
    bounds = list(range(0, cfg.n_paths, cfg.chunk_size)) + [cfg.n_paths]
    jobs = [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    n_threads = cfg.threads()
    if n_threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            chunks = list(pool.map(lambda job: _simulate_chunk(spec, x0, cfg, *job), jobs))
    else:
        chunks = [_simulate_chunk(spec, x0, cfg, lo, hi) for lo, hi in jobs]
    return _merge(chunks)


def simulate_path(spec: DiffusionSpec, x0: float, cfg: SimConfig, path_index: int) -> PathSample:
    """Simulate the single path `path_index` on the full time grid.

    Values agree exactly with the corresponding entry of simulate_ensemble
    under the same seed and config, and stay constant after the stop.
    """
    if not spec.interval.contains(x0):
        raise ValueError(f"x0={x0} outside the open interval")
    one = replace(cfg, n_paths=1)
    summary, (times, values) = _simulate_chunk(spec, x0, one, path_index, path_index + 1,
                                               trajectory=True)
    hits = []
    for level in cfg.watch_levels:
        ht = summary.hit_times[level][0]
        if np.isfinite(ht):
            hits.append(HittingRecord(level=level, time=float(ht), crossed=True))
        else:
            hits.append(HittingRecord(level=level, time=NEVER, crossed=False))
    raw = summary.absorbed_at[0]
    return PathSample(
        times=times,
        values=values,
        absorbed_at=float(raw) if np.isfinite(raw) or raw == math.inf else None,
        truncated=bool(summary.truncated[0]),
        hits=tuple(hits),
        seed_index=path_index,
    )


def estimate_hitting_prob(spec: DiffusionSpec, x0: float, level_up: float,
                          level_down: float, cfg: SimConfig) -> tuple[McEstimate, dict]:
    """Fraction of paths whose first crossing among {up, down} is up.

    Ties break toward the upper level.  Paths reaching neither level by the
    horizon are excluded from the estimate and counted in the report.
    """
    if not (level_down <= x0 <= level_up) or level_down >= level_up:
        raise ValueError("need level_down <= x0 <= level_up with level_down < level_up")
    run_cfg = replace(cfg, watch_levels=(level_up, level_down), stop_at_first_hit=True)
    res = simulate_ensemble(spec, x0, run_cfg)
    t_up = res.hit_times[level_up]
    t_dn = res.hit_times[level_down]
    up_first = np.isfinite(t_up) & (~np.isfinite(t_dn) | (t_up <= t_dn))
    dn_first = np.isfinite(t_dn) & ~up_first
    resolved = int(np.sum(up_first | dn_first))
    report = {
        "n": cfg.n_paths,
        "resolved": resolved,
        "unresolved": cfg.n_paths - resolved,
        "ties": res.tie_count,
    }
    if resolved == 0:
        raise EvalDomainError("no path resolved either level before the horizon")
    return McEstimate.from_binomial(int(np.sum(up_first)), resolved), report
