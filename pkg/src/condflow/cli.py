"""Command-line front end: config parsing, scenario orchestration, reports.

Subcommands: scale, transform, simulate, hitting, condition, verify.
Configuration is flat `key = value` text in INI sections ([spec], [sim],
[scenario], [output]); expression values may be quoted.  A JSON file with
the same section/key layout is accepted as well.  Command-line flags
(--seed, --n, --out, --threads) override the file.

Exit codes: 0 success, 1 verify reported a failing check, 2 configuration
error, 3 numeric failure.  JSON reports are UTF-8 with sorted keys and carry
"schema": 1; CSV output is comma-separated with a header row and '.' as the
decimal mark.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import replace

import numpy as np

from .conditioning import StoppedValueAt, compare_reports, condition_downward, condition_upward
from .errors import ConfigError, NumericFailure
from .exprparse import ParseError, parse_expr
from .htransform import Direction, transform
from .model import DiffusionSpec, Interval, named_family
from .scale import GridConfig, Normalization, compute_scale, classify_boundaries
from .scenarios import SCENARIOS, run_scenario
from .simulate import SimConfig, estimate_hitting_prob, simulate_ensemble, simulate_path

__all__ = ["main"]

_SECTIONS = ("spec", "sim", "scenario", "output")


def _load_config(path: str | None) -> dict[str, dict[str, str]]:
    conf = {name: {} for name in _SECTIONS}
    if path is None:
        return conf
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON config: {exc}") from exc
        for section, entries in data.items():
            if section not in conf:
                raise ConfigError(f"unknown config section {section!r}")
            conf[section].update({str(k): str(v) for k, v in entries.items()})
        return conf
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"bad config: {exc}") from exc
    for section in parser.sections():
        if section not in conf:
            raise ConfigError(f"unknown config section {section!r}")
        for key, value in parser.items(section):
            conf[section][key] = value.strip()
    return conf


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "'\"":
        return value[1:-1]
    return value


def _get(conf, section: str, key: str, default=None, cast=str):
    raw = conf[section].get(key)
    if raw is None:
        return default
    raw = _unquote(raw)
    try:
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def _build_spec(conf) -> DiffusionSpec:
    family = _get(conf, "spec", "family", default="bm")
    if family != "custom":
        try:
            return named_family(family)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    b_src = _get(conf, "spec", "b")
    a_src = _get(conf, "spec", "a")
    if b_src is None or a_src is None:
        raise ConfigError("custom spec needs [spec] b and a expressions")
    l = _get(conf, "spec", "l", default=0.0, cast=float)
    r = _get(conf, "spec", "r", default=math.inf, cast=float)
    try:
        b_expr = parse_expr(b_src)
        a_expr = parse_expr(a_src)
        probe = 0.5 * (max(l, -10.0) + min(r, 10.0))
        b_expr.eval(probe)
        if a_expr.eval(probe) <= 0:
            raise ConfigError(f"diffusion coefficient not positive at y={probe}")
    except ParseError as exc:
        raise ConfigError(f"bad coefficient expression: {exc}") from exc
    except NumericFailure as exc:
        raise ConfigError(f"coefficients not evaluable at the probe point: {exc}") from exc
    return DiffusionSpec(interval=Interval(l, r), drift=b_expr.eval,
                         diffusion=a_expr.eval, label="custom")


def _build_sim(conf, args) -> SimConfig:
    seed = args.seed if args.seed is not None else _get(conf, "sim", "seed", 0, int)
    n = args.n if args.n is not None else _get(conf, "sim", "n_paths", 10_000, int)
    watch = _get(conf, "sim", "watch_levels", default="")
    levels = tuple(float(tok) for tok in watch.split(",") if tok.strip()) if watch else ()
    try:
        return SimConfig(
            dt=_get(conf, "sim", "dt", 1e-3, float),
            horizon=_get(conf, "sim", "horizon", 20.0, float),
            cap=_get(conf, "sim", "cap", 1e8, float),
            bridge_correction=_get(conf, "sim", "bridge", True, bool),
            watch_levels=levels,
            seed=seed,
            n_paths=n,
            n_threads=args.threads,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _grid_bounds(conf, spec: DiffusionSpec, y0: float) -> tuple[float, float]:
    l, r = spec.interval.l, spec.interval.r
    y_min = _get(conf, "scenario", "y_min", cast=float,
                 default=(l + min(1e-2, (y0 - l) / 100.0)) if math.isfinite(l) else y0 - 10.0)
    y_max = _get(conf, "scenario", "y_max", cast=float,
                 default=(r - (r - y0) / 100.0) if math.isfinite(r) else 10.0 * max(1.0, y0))
    return y_min, y_max


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_report(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n"


def cmd_scale(conf, args) -> int:
    spec = _build_spec(conf)
    y0 = _get(conf, "scenario", "y0", 1.0, float)
    y_min, y_max = _grid_bounds(conf, spec, y0)
    grid = GridConfig(y_min=y_min, y_max=y_max,
                      n=_get(conf, "scenario", "n_grid", 257, int))
    requested = _get(conf, "scenario", "normalization")
    if requested is not None:
        s = compute_scale(spec, y0, grid, Normalization[requested])
    else:
        try:
            s = compute_scale(spec, y0, grid, Normalization.L)
        except ValueError:
            s = compute_scale(spec, y0, grid, Normalization.R)
    lines = ["y,s,s_prime"]
    lines += [f"{float(y)!r},{float(v)!r},{float(d)!r}"
              for y, v, d in zip(s.grid, s.values, s.derivs)]
    _emit("\n".join(lines) + "\n", args.out)
    sys.stderr.write(f"classification: {classify_boundaries(s).value}\n")
    return 0


def cmd_transform(conf, args) -> int:
    spec = _build_spec(conf)
    y0 = _get(conf, "scenario", "y0", 1.0, float)
    direction = Direction[_get(conf, "scenario", "direction", "UPWARD").upper()]
    norm = Normalization.L if direction is Direction.UPWARD else Normalization.R
    y_min, y_max = _grid_bounds(conf, spec, y0)
    s = compute_scale(spec, y0, GridConfig(y_min=y_min, y_max=y_max,
                                           n=_get(conf, "scenario", "n_grid", 257, int)), norm)
    result = transform(spec, s, direction).result
    grid = np.linspace(y_min, y_max, _get(conf, "scenario", "n_table", 101, int))
    base_b = np.asarray(spec.drift(grid), dtype=float)
    new_b = np.asarray(result.drift(grid), dtype=float)
    lines = ["y,base_drift,transformed_drift"]
    lines += [f"{float(y)!r},{float(b0)!r},{float(b1)!r}"
              for y, b0, b1 in zip(grid, base_b, new_b)]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_simulate(conf, args) -> int:
    spec = _build_spec(conf)
    cfg = _build_sim(conf, args)
    x0 = _get(conf, "scenario", "x0", 1.0, float)
    res = simulate_ensemble(spec, x0, cfg)
    payload = {"schema": 1, **res.summary()}
    _emit(_json_report(payload), args.out)
    dump = _get(conf, "output", "dump_paths", 0, int)
    if dump > 0:
        stride = max(1, _get(conf, "output", "downsample", 10, int))
        path_file = _get(conf, "output", "paths_csv", "paths.csv")
        with open(path_file, "w", encoding="utf-8") as fh:
            fh.write("path,t,x\n")
            for index in range(min(dump, cfg.n_paths)):
                sample = simulate_path(spec, x0, cfg, index)
                for t, x in zip(sample.times[::stride], sample.values[::stride]):
                    fh.write(f"{index},{float(t)!r},{float(x)!r}\n")
    return 0


def cmd_hitting(conf, args) -> int:
    spec = _build_spec(conf)
    cfg = _build_sim(conf, args)
    x0 = _get(conf, "scenario", "x0", 1.0, float)
    up = _get(conf, "scenario", "up", 2.0, float)
    down = _get(conf, "scenario", "down", 0.0, float)
    est, rep = estimate_hitting_prob(spec, x0, up, down, cfg)
    payload = {"schema": 1, "estimate": est.value, "stderr": est.stderr, **rep}
    _emit(_json_report(payload), args.out)
    return 0


def cmd_condition(conf, args) -> int:
    spec = _build_spec(conf)
    cfg = _build_sim(conf, args)
    x0 = _get(conf, "scenario", "x0", 1.0, float)
    direction = _get(conf, "scenario", "direction", "upward").lower()
    functional = StoppedValueAt(_get(conf, "scenario", "t", 0.25, float))
    if direction == "upward":
        level = _get(conf, "scenario", "a_level", 2.0, float)
        rejection, weighted = condition_upward(spec, x0, level, functional, cfg)
    elif direction == "downward":
        level = _get(conf, "scenario", "level", 0.5, float)
        rejection, weighted = condition_downward(spec, x0, level, functional, cfg)
    else:
        raise ConfigError(f"direction must be upward or downward, got {direction!r}")
    ks = compare_reports(weighted, rejection)
    payload = {
        "schema": 1,
        "reports": [rejection.as_dict(), weighted.as_dict()],
        "ks": ks.as_dict(),
        "acceptance": rejection.acceptance.value,
    }
    _emit(_json_report(payload), args.out)
    return 0


def cmd_verify(conf, args) -> int:
    if args.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {args.scenario!r}; known: {sorted(SCENARIOS)}")
    kwargs = {}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.threads is not None:
        kwargs["threads"] = args.threads
    if args.n is not None and args.scenario != "roundtrip":
        kwargs["n"] = args.n
    report = run_scenario(args.scenario, **kwargs)
    for check in report["checks"]:
        flag = "PASS" if check["pass"] else "FAIL"
        sys.stderr.write(f"[{flag}] {report['scenario']}/{check['name']}\n")
    _emit(_json_report(report), args.out)
    return 0 if report["pass"] else 1


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condflow",
        description="Conditioned diffusions and lattice walks: simulate, transform, verify.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, runner in (
        ("scale", cmd_scale),
        ("transform", cmd_transform),
        ("simulate", cmd_simulate),
        ("hitting", cmd_hitting),
        ("condition", cmd_condition),
        ("verify", cmd_verify),
    ):
        cmd = sub.add_parser(name)
        cmd.set_defaults(runner=runner)
        cmd.add_argument("--config", default=None, metavar="PATH")
        cmd.add_argument("--seed", type=int, default=None, metavar="U64")
        cmd.add_argument("--n", type=int, default=None, metavar="INT")
        cmd.add_argument("--out", default=None, metavar="PATH")
        cmd.add_argument("--threads", type=int, default=None, metavar="INT")
        if name == "verify":
            cmd.add_argument("scenario", choices=sorted(SCENARIOS))
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        conf = _load_config(args.config)
        return args.runner(conf, args)
    except (ConfigError, ParseError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except NumericFailure as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return 3
    except ValueError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
