"""Three routes to the same conditioned law, and their comparison.

* REJECTION keeps the paths on which the conditioning event happened, at
  uniform weight.
* WEIGHTED keeps every resolved path, weighted by the stopped martingale
  value (upward) or its reciprocal (downward) relative to the start point.
* DIRECT simulates the transformed dynamics outright.

All three produce a ConditioningReport carrying one functional sample per
path; reports are compared with a two-sample KS statistic.  The operations
run in local-martingale coordinates: pass dynamics whose coordinate process
is itself a nonnegative local martingale (map a general diffusion through
its scale function first).

Never-hit events are operationalized by the divergence cap (first exceedance
of `cfg.cap` plays the hit of infinity) and by the horizon; the fraction of
paths the horizon truncated is a mandatory report field, and more than 1%
unresolved raises NeedLongerHorizonError.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NeedLongerHorizonError
from .htransform import Direction, transform
from .model import DiffusionSpec, McEstimate, bm, gbm
from .scale import GridConfig, Normalization, compute_scale
from .simulate import EnsembleResult, SimConfig, simulate_ensemble
from .stats import KsResult, effective_sample_size, ks_two_sample, ks_weighted

__all__ = [
    "Mode",
    "ConditioningReport",
    "StoppedValueAt",
    "ValueAtTimeOrLevel",
    "TimeAverageUntilStop",
    "FirstHitTime",
    "TerminalValue",
    "condition_upward",
    "condition_downward",
    "direct_sample",
    "compare_reports",
    "verify_identity_of_measures",
    "verify_local_martingality_of_reciprocal",
]

_MAX_UNRESOLVED = 0.01


class Mode(enum.Enum):
    REJECTION = "REJECTION"
    WEIGHTED = "WEIGHTED"
    DIRECT = "DIRECT"


# --- path functionals (stopped-path measurable, ensemble computable) --------


@dataclass(frozen=True)
class StoppedValueAt:
    """Path value at t, frozen at the run's stopping events before t."""

    t: float
    snapshot_times: tuple[float, ...] = field(init=False)
    watch_levels: tuple[float, ...] = ()
    track_time_average: bool = False

    def __post_init__(self):
        object.__setattr__(self, "snapshot_times", (self.t,))

    def extract(self, res: EnsembleResult) -> np.ndarray:
        return res.snapshots[self.t].copy()


@dataclass(frozen=True)
class ValueAtTimeOrLevel:
    """Path value at t, frozen at `level` if that level was crossed first
    (for functionals measurable before the run's own stopping level)."""

    t: float
    level: float
    snapshot_times: tuple[float, ...] = field(init=False)
    watch_levels: tuple[float, ...] = field(init=False)
    track_time_average: bool = False

    def __post_init__(self):
        object.__setattr__(self, "snapshot_times", (self.t,))
        object.__setattr__(self, "watch_levels", (self.level,))

    def extract(self, res: EnsembleResult) -> np.ndarray:
        hit = res.hit_times[self.level]
        return np.where(np.isfinite(hit) & (hit <= self.t), self.level, res.snapshots[self.t])


@dataclass(frozen=True)
class TimeAverageUntilStop:
    """Time average of the path up to its stop (absorption or freeze)."""

    snapshot_times: tuple[float, ...] = ()
    watch_levels: tuple[float, ...] = ()
    track_time_average: bool = True

    def extract(self, res: EnsembleResult) -> np.ndarray:
        stop = res.stop_times
        return np.where(stop > 0, res.time_integral / np.maximum(stop, 1e-300), res.final_values)


@dataclass(frozen=True)
class FirstHitTime:
    """First crossing time of one level (nan where it never crossed)."""

    level: float
    snapshot_times: tuple[float, ...] = ()
    watch_levels: tuple[float, ...] = field(init=False)
    track_time_average: bool = False

    def __post_init__(self):
        object.__setattr__(self, "watch_levels", (self.level,))

    def extract(self, res: EnsembleResult) -> np.ndarray:
        return res.hit_times[self.level].copy()


@dataclass(frozen=True)
class TerminalValue:
    """Value at the stop (absorption value, freeze level, or horizon value)."""

    snapshot_times: tuple[float, ...] = ()
    watch_levels: tuple[float, ...] = ()
    track_time_average: bool = False

    def extract(self, res: EnsembleResult) -> np.ndarray:
        return res.final_values.copy()


# --- reports -----------------------------------------------------------------


@dataclass
class ConditioningReport:
    """Weighted or unweighted conditional sample of one path functional."""

    mode: Mode
    n_total: int
    n_accepted: int
    weights: np.ndarray
    functional_samples: np.ndarray
    ess: float
    truncated_fraction: float
    tie_count: int = 0
    acceptance: McEstimate | None = None
    comparison: KsResult | None = None

    def as_dict(self) -> dict:
        out = {
            "mode": self.mode.value,
            "n_total": self.n_total,
            "n_accepted": self.n_accepted,
            "ess": self.ess,
            "truncated_fraction": self.truncated_fraction,
        }
        if self.comparison is not None:
            out["ks"] = self.comparison.as_dict()
        return out


def _run(spec: DiffusionSpec, x0: float, functional, cfg: SimConfig,
         stop_level: float) -> EnsembleResult:
    watch = (stop_level,) + tuple(lv for lv in functional.watch_levels if lv != stop_level)
    run_cfg = replace(
        cfg,
        watch_levels=watch,
        stop_levels=(stop_level,),
        stop_at_first_hit=True,
        snapshot_times=tuple(sorted(set(cfg.snapshot_times) | set(functional.snapshot_times))),
        track_time_average=cfg.track_time_average or functional.track_time_average,
    )
    return simulate_ensemble(spec, x0, run_cfg)


def _check_horizon(res: EnsembleResult, what: str) -> float:
    trunc = res.truncated_fraction()
    if trunc > _MAX_UNRESOLVED:
        raise NeedLongerHorizonError(
            f"{what}: {100 * trunc:.1f}% of paths resolved neither level before the horizon",
            unresolved_fraction=trunc,
        )
    return trunc


def condition_upward(spec: DiffusionSpec, x0: float, a: float, functional,
                     cfg: SimConfig) -> tuple[ConditioningReport, ConditioningReport]:
    """Condition a nonnegative local martingale to hit `a` before the lower
    boundary; returns (REJECTION, WEIGHTED) reports.

    Rejection keeps paths whose first hit among {a, lower boundary} is `a`;
    weighting assigns each resolved path its stopped value over x0, which is
    a/x0 on the acceptance event and the boundary value off it.
    """
    if not spec.interval.l < x0 <= a < spec.interval.r:
        raise ValueError("need l < x0 <= a < r")
    res = _run(spec, x0, functional, cfg, stop_level=a)
    trunc = _check_horizon(res, "condition_upward")
    samples = functional.extract(res)
    accepted = np.isfinite(res.hit_times[a])
    resolved = ~res.truncated

    rejection = ConditioningReport(
        mode=Mode.REJECTION,
        n_total=res.n,
        n_accepted=int(np.sum(accepted)),
        weights=np.ones(int(np.sum(accepted))),
        functional_samples=samples[accepted],
        ess=float(np.sum(accepted)),
        truncated_fraction=trunc,
        tie_count=res.tie_count,
        acceptance=McEstimate.from_binomial(int(np.sum(accepted)), res.n),
    )
    weights = res.final_values[resolved] / x0
    weighted = ConditioningReport(
        mode=Mode.WEIGHTED,
        n_total=res.n,
        n_accepted=int(np.sum(accepted)),
        weights=weights,
        functional_samples=samples[resolved],
        ess=effective_sample_size(weights),
        truncated_fraction=trunc,
        tie_count=res.tie_count,
        acceptance=rejection.acceptance,
    )
    return rejection, weighted


def condition_downward(spec_q: DiffusionSpec, x0: float, level: float, functional,
                       cfg: SimConfig) -> tuple[ConditioningReport, ConditioningReport]:
    """Condition transformed dynamics to hit a low level before diverging.

    The divergence cap plays the hit of infinity: rejection keeps paths that
    reach `level` before exceeding the cap; weighting assigns x0 over the
    stopped value, so exactly x0/level on the acceptance event and a small
    weight on diverged paths.  Horizon-truncated paths stay in the weighted
    sample at x0 over their horizon value, which keeps the stopped
    reciprocal-martingale identity exact.
    """
    if not spec_q.interval.l < level <= x0 < spec_q.interval.r:
        raise ValueError("need l < level <= x0 < r")
    res = _run(spec_q, x0, functional, cfg, stop_level=level)
    trunc = _check_horizon(res, "condition_downward")
    samples = functional.extract(res)
    accepted = np.isfinite(res.hit_times[level])

    rejection = ConditioningReport(
        mode=Mode.REJECTION,
        n_total=res.n,
        n_accepted=int(np.sum(accepted)),
        weights=np.ones(int(np.sum(accepted))),
        functional_samples=samples[accepted],
        ess=float(np.sum(accepted)),
        truncated_fraction=trunc,
        tie_count=res.tie_count,
        acceptance=McEstimate.from_binomial(int(np.sum(accepted)), res.n),
    )
    weights = x0 / res.final_values
    weighted = ConditioningReport(
        mode=Mode.WEIGHTED,
        n_total=res.n,
        n_accepted=int(np.sum(accepted)),
        weights=weights,
        functional_samples=samples,
        ess=effective_sample_size(weights),
        truncated_fraction=trunc,
        tie_count=res.tie_count,
        acceptance=rejection.acceptance,
    )
    return rejection, weighted


def direct_sample(spec: DiffusionSpec, x0: float, functional, cfg: SimConfig,
                  stop_level: float, allow_truncated: bool = False) -> ConditioningReport:
    """Simulate (transformed) dynamics directly and sample the functional.

    Set allow_truncated when the functional is fully determined before the
    horizon (for example a stopped value at a small t), so paths that have
    not yet reached the stopping level are legitimate samples.
    """
    res = _run(spec, x0, functional, cfg, stop_level=stop_level)
    trunc = res.truncated_fraction() if allow_truncated else _check_horizon(res, "direct_sample")
    samples = functional.extract(res)
    return ConditioningReport(
        mode=Mode.DIRECT,
        n_total=res.n,
        n_accepted=res.n,
        weights=np.ones(res.n),
        functional_samples=samples,
        ess=float(res.n),
        truncated_fraction=trunc,
        tie_count=res.tie_count,
    )


def compare_reports(left: ConditioningReport, right: ConditioningReport) -> KsResult:
    """KS between two reports' functional samples (weighted ECDF when the
    left report carries nonuniform weights); stored on both reports."""
    uniform = left.weights.size == 0 or np.all(left.weights == left.weights[0])
    if uniform:
        ks = ks_two_sample(left.functional_samples, right.functional_samples)
    else:
        ks = ks_weighted(left.functional_samples, left.weights, right.functional_samples)
    left.comparison = ks
    right.comparison = ks
    return ks


# --- scenario verifications ---------------------------------------------------


def _bm_unit_interval_dynamics(r: float = 2.0) -> DiffusionSpec:
    base = bm(0.0, r)
    s = compute_scale(base, 1.0, GridConfig(y_min=1e-4, y_max=r - 1e-4), Normalization.L)
    return transform(base, s, Direction.UPWARD).result


def _gbm_unit_drift_dynamics() -> DiffusionSpec:
    base = gbm()
    s = compute_scale(base, 1.0, GridConfig(y_min=1e-4, y_max=50.0), Normalization.L)
    return transform(base, s, Direction.UPWARD).result


def verify_identity_of_measures(scenario: str, cfg: SimConfig) -> dict:
    """Compare conditional and transformed dynamics for the two textbook
    cases with a positive no-absorption probability.

    scenario "STOPPED_BM_POSITIVE_B": coordinate process absorbed at {0, 2};
    the conditional law given absorption at 2 must match the transformed
    dynamics (report passes when KS is below critical).  scenario
    "GBM_B_POSITIVE_NOT_UI": driftless geometric Brownian motion never hits
    0, but its transform is a different measure (report passes when KS is
    ABOVE critical).
    """
    if scenario == "STOPPED_BM_POSITIVE_B":
        functional = TimeAverageUntilStop()
        base_cfg = replace(cfg, watch_levels=(), track_time_average=True)
        res = simulate_ensemble(bm(0.0, 2.0), 1.0, base_cfg)
        accepted = res.absorbed_at == 2.0
        samples = functional.extract(res)[accepted]
        direct = direct_sample(_bm_unit_interval_dynamics(2.0), 1.0, functional, cfg,
                               stop_level=2.0)
        ks = ks_two_sample(samples, direct.functional_samples)
        acceptance = McEstimate.from_binomial(int(np.sum(accepted)), res.n)
        return {
            "scenario": scenario,
            "ks": ks.as_dict(),
            "acceptance": {"value": acceptance.value, "stderr": acceptance.stderr},
            "expected_acceptance": 0.5,
            "truncated_fraction": res.truncated_fraction(),
            "pass": ks.passed and abs(acceptance.value - 0.5) <= 4 * max(acceptance.stderr, 1e-12),
        }
    if scenario == "GBM_B_POSITIVE_NOT_UI":
        horizon_cfg = replace(cfg, horizon=max(cfg.horizon, 1.0 + cfg.dt),
                              snapshot_times=(1.0,))
        p_run = simulate_ensemble(gbm(), 1.0, horizon_cfg)
        q_run = simulate_ensemble(_gbm_unit_drift_dynamics(), 1.0, horizon_cfg)
        ks = ks_two_sample(p_run.snapshots[1.0], q_run.snapshots[1.0])
        return {
            "scenario": scenario,
            "ks": ks.as_dict(),
            "measures_differ": not ks.passed,
            "truncated_fraction": q_run.truncated_fraction(),
            "pass": not ks.passed,
        }
    raise ValueError(f"unknown scenario {scenario!r}")


def verify_local_martingality_of_reciprocal(
    spec_q: DiffusionSpec,
    cfg: SimConfig,
    x0: float = 1.0,
    band: tuple[float, float] = (0.1, 10.0),
    t: float = 1.0,
    divergence_level: float = 10.0,
    divergence_horizon: float = 200.0,
) -> dict:
    """Check that the reciprocal of the transformed coordinate behaves like a
    martingale inside a band, and that paths diverge past any level.

    Part 1: the mean of 1/X at t stopped at the band edges must equal 1/x0
    within four standard errors.  Part 2: the fraction of paths exceeding
    `divergence_level` before `divergence_horizon` is reported (it tends to
    one as the horizon grows).
    """
    lo, hi = band
    band_cfg = replace(cfg, watch_levels=(lo, hi), stop_at_first_hit=True,
                       snapshot_times=(t,), horizon=max(cfg.horizon, t + cfg.dt))
    res = simulate_ensemble(spec_q, x0, band_cfg)
    stopped = res.snapshots[t]
    recip = McEstimate.from_samples(1.0 / stopped)
    part1_pass = abs(recip.value - 1.0 / x0) <= 4 * max(recip.stderr, 1e-15)

    div_cfg = replace(
        cfg,
        watch_levels=(divergence_level,),
        stop_at_first_hit=True,
        horizon=divergence_horizon,
        snapshot_times=(),
        dt_schedule=cfg.dt_schedule or ((min(1.0, divergence_horizon / 2), cfg.dt),
                                        (divergence_horizon, min(100 * cfg.dt, divergence_horizon / 100))),
    )
    div = simulate_ensemble(spec_q, x0, div_cfg)
    frac = McEstimate.from_binomial(int(np.sum(np.isfinite(div.hit_times[divergence_level]))), div.n)
    return {
        "reciprocal_mean": {"value": recip.value, "stderr": recip.stderr, "target": 1.0 / x0},
        "reciprocal_pass": part1_pass,
        "divergence_fraction": {"value": frac.value, "stderr": frac.stderr},
        "tie_count": res.tie_count,
        "truncated_fraction": res.truncated_fraction(),
    }
