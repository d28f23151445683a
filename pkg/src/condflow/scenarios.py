"""Verification scenarios: each runs a bundle of named checks and reports
one PASS/FAIL per check.

These are the library-level runners behind the command line's `verify`
subcommand and the acceptance test suite.  Randomized checks use four
standard errors of tolerance; distribution comparisons use the 1% KS
critical value (or twice it where flagged as a smoke check).  Every check is
deterministic given the seed.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .conditioning import (
    StoppedValueAt,
    compare_reports,
    condition_downward,
    condition_upward,
    direct_sample,
    verify_identity_of_measures,
    verify_local_martingality_of_reciprocal,
)
from .counterexample import compare_conditionings
from .exprparse import parse_expr
from .htransform import Direction, check_generator_identity, downward_scale, transform
from .jumpwalk import (
    JumpWalkSpec,
    Measure,
    discrete_generator,
    simulate_walk,
    verify_generator_limit,
    verify_reciprocal_supermartingale,
    walk_vs_bessel,
)
from .model import DiffusionSpec, Interval, bessel3, bm, gbm
from .scale import GridConfig, Normalization, ScaleFunction, compute_scale, exact_scale
from .simulate import SimConfig, estimate_hitting_prob, simulate_ensemble

__all__ = ["SCENARIOS", "run_scenario"]


def _check(name: str, passed: bool, **detail) -> dict:
    return {"name": name, "pass": bool(passed), "detail": detail}


def _bundle(scenario: str, checks: list[dict]) -> dict:
    return {
        "schema": 1,
        "scenario": scenario,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
    }


def _exact_linear_scale(y_lo: float = 1e-3, y_hi: float = 50.0) -> ScaleFunction:
    grid = np.geomspace(y_lo, y_hi, 201)
    return exact_scale(lambda y: np.asarray(y, dtype=float),
                       lambda y: np.ones_like(np.asarray(y, dtype=float)),
                       grid, Normalization.L, (0.0, math.inf), label="identity")


def scenario_bm_bessel(n: int = 100_000, n_ks: int = 10_000, dt: float = 1e-3,
                       seed: int = 2024, threads: int | None = None) -> dict:
    """Hitting identity for the coordinate martingale, and upward
    conditioning against directly simulated conditioned dynamics."""
    checks = []
    for a, horizon in ((2.0, 20.0), (4.0, 40.0)):
        cfg = SimConfig(dt=dt, horizon=horizon, seed=seed, n_paths=n, n_threads=threads)
        est, rep = estimate_hitting_prob(bm(), 1.0, a, 0.0, cfg)
        target = 1.0 / a
        tol = 4.0 * max(est.stderr, 1e-12)
        checks.append(_check(
            f"hitting-identity-a{int(a)}",
            abs(est.value - target) <= tol,
            estimate=est.value, stderr=est.stderr, target=target,
            unresolved=rep["unresolved"], ties=rep["ties"],
        ))

    # the rejection side keeps about half its paths, so run twice as many
    cfg = SimConfig(dt=dt, horizon=20.0, seed=seed + 1, n_paths=2 * n_ks, n_threads=threads)
    rejection, _weighted = condition_upward(bm(), 1.0, 2.0, StoppedValueAt(0.25), cfg)
    direct = direct_sample(bessel3(), 1.0,
                           StoppedValueAt(0.25),
                           replace(cfg, seed=seed + 2, n_paths=n_ks), stop_level=2.0)
    ks = compare_reports(rejection, direct)
    checks.append(_check(
        "upward-conditioning-matches-direct",
        ks.passed,
        ks_stat=ks.statistic, critical_1pct=ks.critical_1pct,
        n_accepted=rejection.n_accepted,
        acceptance=rejection.acceptance.value,
    ))
    return _bundle("bm-bessel", checks)


def scenario_bessel_bm(n: int = 10_000, dt: float = 1e-3, seed: int = 2025,
                       threads: int | None = None) -> dict:
    """Downward conditioning of the conditioned dynamics recovers the base
    law, plus reciprocal-martingale and divergence checks."""
    checks = []
    # conditioned dynamics run to a long horizon; hits of the low level are
    # detected on the fine early grid, the slow divergence on a coarse one
    cfg_down = SimConfig(
        dt=dt, horizon=10_000.0, cap=100.0, seed=seed, n_paths=n, n_threads=threads,
        dt_schedule=((1.0, dt), (10.0, 10 * dt), (10_000.0, 0.25)),
    )
    rejection, weighted = condition_downward(bessel3(), 1.0, 0.5, StoppedValueAt(0.1), cfg_down)
    cfg_ref = SimConfig(dt=dt, horizon=0.2, seed=seed + 1, n_paths=n, n_threads=threads)
    reference = direct_sample(bm(), 1.0, StoppedValueAt(0.1), cfg_ref, stop_level=0.5,
                              allow_truncated=True)
    ks = compare_reports(weighted, reference)
    checks.append(_check(
        "downward-roundtrip-ks",
        ks.passed,
        ks_stat=ks.statistic, critical_1pct=ks.critical_1pct, ess=weighted.ess,
        truncated_fraction=weighted.truncated_fraction,
    ))
    acc = rejection.acceptance
    checks.append(_check(
        "downward-acceptance-half",
        abs(acc.value - 0.5) <= 4.0 * max(acc.stderr, 1e-12),
        acceptance=acc.value, stderr=acc.stderr, target=0.5,
    ))

    cfg_band = SimConfig(dt=dt, horizon=2.0, seed=seed + 2, n_paths=n, n_threads=threads)
    recip = verify_local_martingality_of_reciprocal(
        bessel3(), cfg_band, x0=1.0, band=(0.1, 10.0), t=1.0,
        divergence_level=10.0, divergence_horizon=200.0)
    checks.append(_check(
        "reciprocal-band-martingale",
        recip["reciprocal_pass"],
        **recip["reciprocal_mean"],
    ))
    checks.append(_check(
        "divergence-past-10-by-200",
        recip["divergence_fraction"]["value"] >= 0.95,
        fraction=recip["divergence_fraction"]["value"],
        stderr=recip["divergence_fraction"]["stderr"],
    ))
    return _bundle("bessel-bm", checks)


def scenario_gbm(n: int = 10_000, dt: float = 1e-3, seed: int = 2026,
                 threads: int | None = None) -> dict:
    """Unit-drift transform of geometric Brownian motion, and the strict
    difference between base and transformed laws."""
    checks = []
    base = gbm()
    s = compute_scale(base, 1.0, GridConfig(y_min=1e-3, y_max=50.0), Normalization.L)
    result = transform(base, s, Direction.UPWARD).result
    grid = np.linspace(0.1, 10.0, 199)
    drift_err = float(np.max(np.abs(result.drift(grid) - grid)))
    checks.append(_check("transformed-drift-is-y", drift_err <= 1e-6, max_error=drift_err))

    cfg = SimConfig(dt=dt, horizon=1.0 + dt, seed=seed, n_paths=n, n_threads=threads,
                    snapshot_times=(1.0,))
    run = simulate_ensemble(result, 1.0, cfg)
    logs = np.log(run.snapshots[1.0])
    mean = float(np.mean(logs))
    sem = float(np.std(logs, ddof=1) / math.sqrt(n))
    checks.append(_check(
        "log-mean-at-1-is-half",
        abs(mean - 0.5) <= 4.0 * sem,
        mean=mean, stderr=sem, target=0.5,
    ))

    ident = verify_identity_of_measures(
        "GBM_B_POSITIVE_NOT_UI",
        SimConfig(dt=dt, horizon=1.0 + dt, seed=seed + 1, n_paths=n, n_threads=threads))
    checks.append(_check("p-and-q-measures-differ", ident["pass"], **ident["ks"]))
    return _bundle("gbm", checks)


def scenario_stopped_bm(n: int = 10_000, dt: float = 1e-3, seed: int = 2027,
                        threads: int | None = None) -> dict:
    """Rejection conditioning on absorption at the top equals the
    transformed dynamics when the coordinate is a bounded martingale."""
    cfg = SimConfig(dt=dt, horizon=30.0, seed=seed, n_paths=n, n_threads=threads)
    ident = verify_identity_of_measures("STOPPED_BM_POSITIVE_B", cfg)
    checks = [
        _check("rejection-matches-transformed", ident["ks"]["pass"], **ident["ks"]),
        _check(
            "acceptance-fraction-half",
            abs(ident["acceptance"]["value"] - 0.5) <= 4.0 * max(ident["acceptance"]["stderr"], 1e-12),
            **ident["acceptance"],
        ),
    ]
    return _bundle("stopped-bm", checks)


def scenario_counterexample(n: int = 10_000, dt: float = 1e-3, seed: int = 2028,
                            threads: int | None = None) -> dict:
    """Two approximating sequences of the same nullset induce different
    conditional measures."""
    cfg = SimConfig(dt=dt, horizon=60.0, seed=seed, n_paths=n, n_threads=threads,
                    dt_schedule=((2.0, dt), (60.0, 10 * dt)))
    rep = compare_conditionings(cfg, a=2.0, t_snap=0.5)
    checks = [
        _check("stop-values-differ-frequently", rep["freq_stop_value_differs"] > 0.1,
               frequency=rep["freq_stop_value_differs"]),
        _check("conditional-measures-differ", rep["measures_differ"], **rep["ks"]),
        _check("transformed-path-martingale", rep["martingale_pass"],
               **rep["martingale_mean"]),
    ]
    return _bundle("counterexample", checks)


def scenario_jumpwalk(n: int = 10_000, seed: int = 2029, n_ks: int = 10_000,
                      threads: int | None = None) -> dict:
    """Exact lattice identities, generator convergence, positivity of the
    conditioned walk, and the diffusion-limit smoke check."""
    checks = []
    quad_errs = []
    for n_lat in (4, 10, 50):
        spec = JumpWalkSpec(N=n_lat, measure=Measure.Q, x0=1.0)
        for x in (2.0 / n_lat, 1.0, 2.0):
            x_lat = round(x * n_lat) / n_lat
            if x_lat < 2.0 / n_lat:
                continue
            quad_errs.append(abs(discrete_generator(spec, lambda v: v * v, x_lat) - 3.0))
    checks.append(_check("generator-exact-for-squares", max(quad_errs) <= 1e-9,
                         max_error=max(quad_errs)))

    errs = verify_generator_limit(np.sin, 1.0, [10, 20])
    ratio = errs[10] / errs[20]
    checks.append(_check("generator-error-ratio-sin", 3.0 <= ratio <= 5.0,
                         ratio=ratio, errors={str(k): v for k, v in errs.items()}))

    spec10 = JumpWalkSpec(N=10, measure=Measure.Q, x0=1.0)
    recip_interior = verify_reciprocal_supermartingale(spec10, 0.5)
    recip_floor = verify_reciprocal_supermartingale(spec10, 0.1)
    checks.append(_check(
        "reciprocal-one-step-means",
        abs(recip_interior - 2.0) <= 1e-12 and abs(recip_floor - 5.0) <= 1e-12,
        interior=recip_interior, floor=recip_floor,
    ))

    # walk long enough that the positivity guarantee covers 10^6 steps at
    # any path count
    t_walk = max(1.0, 1_000_000 / (n * spec10.N**2))
    walk = simulate_walk(spec10, t=t_walk, n_paths=n, seed=seed)
    total_steps = walk["n_steps"] * n
    checks.append(_check(
        "conditioned-walk-stays-positive",
        float(np.min(walk["min_value"])) > 0.0 and total_steps >= 1_000_000,
        min_value=float(np.min(walk["min_value"])), steps=total_steps,
    ))

    ks = walk_vs_bessel(50, x0=1.0, t=1.0, n_paths=n_ks, seed=seed + 1)
    checks.append(_check(
        "walk-limit-smoke-check",
        ks.statistic < 2.0 * ks.critical_1pct,
        ks_stat=ks.statistic, loosened_critical=2.0 * ks.critical_1pct,
    ))
    return _bundle("jumpwalk", checks)


def scenario_roundtrip(seed: int = 2030, threads: int | None = None) -> dict:
    """Generator identity at finite differences, its second-order error law,
    and the up-then-down drift round trip."""
    checks = []
    s = _exact_linear_scale()
    grid = np.linspace(0.5, 3.0, 101)
    phis = {"y^2": parse_expr("y^2"), "log y": parse_expr("log(y)")}
    worst = 0.0
    for spec in (bm(), gbm()):
        for phi in phis.values():
            worst = max(worst, check_generator_identity(spec, s, phi, grid))
    checks.append(_check("generator-identity-max-error", worst <= 1e-5, max_error=worst))

    # with a linear scale and zero drift the discretized identity is exact,
    # so the second-order error law is exhibited on a drifted spec whose
    # scale is genuinely curved
    drifted = DiffusionSpec(Interval(0.0, math.inf),
                            lambda y: np.ones_like(np.asarray(y, dtype=float)),
                            lambda y: np.ones_like(np.asarray(y, dtype=float)),
                            label="unit-drift")
    s_exp = exact_scale(lambda y: 0.5 * (1.0 - np.exp(-2.0 * np.asarray(y, dtype=float))),
                        lambda y: np.exp(-2.0 * np.asarray(y, dtype=float)),
                        np.geomspace(1e-3, 8.0, 201), Normalization.L, (0.0, 0.5),
                        label="exp-scale")
    e_h = check_generator_identity(drifted, s_exp, phis["log y"], grid, h=0.02)
    e_h2 = check_generator_identity(drifted, s_exp, phis["log y"], grid, h=0.01)
    ratio = e_h / e_h2
    checks.append(_check("fd-error-ratio", 3.5 <= ratio <= 4.5, ratio=ratio,
                         error_h=e_h, error_h_half=e_h2))

    sup = 0.0
    probe = np.linspace(0.2, 5.0, 97)
    for base in (bm(), gbm()):
        up = transform(base, s, Direction.UPWARD)
        down = transform(up.result, downward_scale(s), Direction.DOWNWARD)
        sup = max(sup, float(np.max(np.abs(down.result.drift(probe) - base.drift(probe)))))
    checks.append(_check("up-down-drift-roundtrip", sup <= 1e-6, sup_error=sup))
    return _bundle("roundtrip", checks)


SCENARIOS = {
    "bm-bessel": scenario_bm_bessel,
    "bessel-bm": scenario_bessel_bm,
    "gbm": scenario_gbm,
    "stopped-bm": scenario_stopped_bm,
    "counterexample": scenario_counterexample,
    "jumpwalk": scenario_jumpwalk,
    "roundtrip": scenario_roundtrip,
}


def run_scenario(name: str, **kwargs) -> dict:
    """Run one named scenario; unknown names raise KeyError."""
    try:
        runner = SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}") from None
    return runner(**kwargs)
