"""Command-line experiment runner.

Experiments are described by JSON configs validated against a published
schema; flags override config fields.  Every run writes a data CSV (schema
fixed per experiment kind) plus a manifest JSON recording the config hash,
seed, library versions, wall time and any pass/fail checks the config
names.  Outputs are deterministic: config + seed determine every CSV byte,
and --threads changes wall time only.

Exit codes: 0 success, 1 runtime failure, 2 config error, 3 failed
acceptance or named check.
"""

from __future__ import annotations

import json
import math
import os
import platform
import sys
import time

import click
import jsonschema
import numpy as np
import scipy

from .artifacts import config_hash, write_csv, write_manifest
from .domains import DriftSpec, Interval
from .estimators import (boundary_decay_profile, estimate_exit_moments,
                         estimate_exit_position, estimate_u, ratio_profile)
from .fdsolver import Grid1D, max_stable_dt, solve
from .paths import PathConfig
from .problem import ProblemSpec
from .quadrature import (BallExteriorBarrier, BarrierSpec, HalfSpaceBarrier,
                         IntervalBarrier, KernelSpec, QuadratureConfig,
                         frac_laplacian_barrier)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_CHECK = 3

KINDS = ("exit-time", "exit-position", "solve-mc", "solve-fd",
         "barrier", "ratio", "decay")

_NUM_ARRAY = {"type": "array", "items": {"type": "number"}, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "kind": {"enum": list(KINDS)},
        "problem": {
            "type": "object",
            "required": ["alpha", "domain"],
            "properties": {
                "alpha": {"type": "number",
                          "exclusiveMinimum": 0, "exclusiveMaximum": 2},
                "dim": {"type": "integer", "minimum": 1},
                "domain": {"type": "object"},
                "drift": {"type": "object"},
                "phi": {"type": "object"},
                "f": {"type": "object"},
            },
        },
        "cfg": {"type": "object"},
        "params": {
            "type": "object",
            "properties": {
                "x0": {"type": "number"},
                "t": {"type": "number", "exclusiveMinimum": 0},
                "theta": {},
                "max_order": {"type": "integer", "minimum": 1},
                "x_grid": _NUM_ARRAY,
                "t_grid": _NUM_ARRAY,
                "eps_grid": _NUM_ARRAY,
                "distance": {},
                "alpha": {},
                "theta_frac": {},
                "shape": {"enum": ["halfspace", "ball", "interval"]},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "a": {"type": "number"},
                "b": {"type": "number"},
            },
        },
        "n_paths": {"type": "integer", "minimum": 100},
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "output_dir": {"type": "string"},
        "checks": {"enum": ["prop81"]},
    },
}


class ConfigError(click.ClickException):
    exit_code = EXIT_CONFIG


def _validate(config: dict) -> None:
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "(root)"
        raise ConfigError(f"config error at {path}: {e.message}") from e


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e


def _build(config: dict, builder, section: str):
    """Turn a config section into a library object; report failures as
    config errors naming the section."""
    try:
        return builder()
    except (ValueError, TypeError, KeyError) as e:
        raise ConfigError(f"config error at {section}: {e}") from e


def _problem_from(config: dict) -> ProblemSpec:
    if "problem" not in config:
        raise ConfigError("config error at problem: this experiment kind "
                          "requires a 'problem' section")
    return _build(config, lambda: ProblemSpec.from_json(config["problem"]),
                  "problem")


def _path_config_from(config: dict) -> PathConfig:
    cfg = config.get("cfg", {})
    return _build(config, lambda: PathConfig(**cfg), "cfg")


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _params(config: dict, *required):
    params = config.get("params", {})
    for key in required:
        if key not in params:
            raise ConfigError(f"config error at params/{key}: required for "
                              f"kind {config['kind']!r}")
    return params


# --- kind runners: each returns (header, rows, manifest_extras) ------------

def _run_exit_time(config):
    prob = _problem_from(config)
    pcfg = _path_config_from(config)
    params = _params(config)
    x_grid = params.get("x_grid") or [params.get("x0", 0.5)]
    max_order = int(params.get("max_order", 1))
    n = config["n_paths"]
    rows = []
    for j, x in enumerate(float(v) for v in x_grid):
        res = estimate_exit_moments(x, prob, pcfg, n, max_order=max_order,
                                    seed=config["seed"], threads=config["threads"],
                                    start_index=j * n)
        for k, m in enumerate(res.moments, start=1):
            rows.append((x, k, m.mean, m.stderr, res.censored.mean))
    return ("x", "order", "mean", "stderr", "censored_frac"), rows, {}


def _prop81_checks(rows):
    """Pass/fail flags for the asymmetric-touching statement on (0,1) with
    inward drift at the left endpoint: the left boundary is never touched
    (fraction < 1% at eps = 1e-4, decreasing in eps) while the right one is."""
    frac = {(eps, comp): f for eps, comp, f in rows}
    eps_sorted = sorted({eps for eps, _, _ in rows}, reverse=True)
    left = [frac[(eps, "left")] for eps in eps_sorted]
    checks = {
        "left_touch_small": frac[(min(eps_sorted), "left")] < 0.01,
        "right_touch_positive": frac[(min(eps_sorted), "right")] > 0.01,
        "left_monotone": all(a >= b for a, b in zip(left, left[1:])),
    }
    checks["passed"] = all(checks.values())
    return checks


def _run_exit_position(config):
    prob = _problem_from(config)
    pcfg = _path_config_from(config)
    params = _params(config, "x0", "eps_grid")
    res = estimate_exit_position(params["x0"], prob, pcfg, config["n_paths"],
                                 params["eps_grid"], seed=config["seed"],
                                 threads=config["threads"])
    rows = [(params["x0"], eps, comp, f) for eps, comp, f in res.rows]
    extras = {"n_exits": res.n_exits, "censored_frac": res.censored_frac}
    if config.get("checks") == "prop81":
        extras["criteria"] = {"prop81": _prop81_checks(res.rows)}
    return ("x", "eps", "component", "fraction"), rows, extras


def _run_solve_mc(config):
    prob = _problem_from(config)
    pcfg = _path_config_from(config)
    params = _params(config, "t_grid", "x_grid")
    n = config["n_paths"]
    rows = []
    idx = 0
    for t in params["t_grid"]:
        for x in params["x_grid"]:
            res = estimate_u(float(t), float(x), prob, pcfg, n,
                             seed=config["seed"], threads=config["threads"],
                             start_index=idx * n)
            rows.append((float(t), float(x), res.mean, res.stderr))
            idx += 1
    return ("t", "x", "value", "stderr"), rows, {}


def _run_solve_fd(config):
    prob = _problem_from(config)
    params = _params(config, "t_grid", "x_grid")
    if not isinstance(prob.domain, Interval):
        raise ConfigError("config error at problem/domain: solve-fd requires "
                          "an interval domain")
    cfg = config.get("cfg", {})
    N = int(cfg.get("N", 400))
    grid = _build(config, lambda: Grid1D.for_interval(prob.domain, N), "cfg/N")
    T = max(float(t) for t in params["t_grid"])
    dt = cfg.get("dt")
    if dt is None:
        dt = min(max_stable_dt(grid, prob.drift, prob.domain), T / 200.0)
    n_steps = math.ceil(T / float(dt))
    store_every = max(1, n_steps // 2000)
    sol = solve(prob, grid, float(dt), T, store_every=store_every)
    rows = [(float(t), float(x), float(sol.at(float(t), float(x))), 0.0)
            for t in params["t_grid"] for x in params["x_grid"]]
    return ("t", "x", "value", "stderr"), rows, {"N": N, "dt": float(dt)}


_BARRIER_SHAPES = {
    "halfspace": lambda p: HalfSpaceBarrier(),
    "ball": lambda p: BallExteriorBarrier(p.get("radius", 1.0)),
    "interval": lambda p: IntervalBarrier(p.get("a", 0.0), p.get("b", 1.0)),
}


def _run_barrier(config):
    params = _params(config, "alpha")
    qcfg = _build(config, lambda: QuadratureConfig(**config.get("cfg", {})), "cfg")
    shape = params.get("shape", "halfspace")
    geometry = _build(config, lambda: _BARRIER_SHAPES[shape](params), "params")
    if "theta" in params and "theta_frac" in params:
        raise ConfigError("config error at params: give 'theta' or "
                          "'theta_frac', not both")
    if "theta" not in params and "theta_frac" not in params:
        raise ConfigError("config error at params: barrier needs 'theta' "
                          "(absolute) or 'theta_frac' (fraction of alpha)")
    distances = [float(v) for v in _as_list(params.get("distance", 1.0))]
    rows = []
    for alpha in (float(v) for v in _as_list(params["alpha"])):
        if "theta" in params:
            thetas = [float(v) for v in _as_list(params["theta"])]
        else:
            thetas = [float(v) * alpha for v in _as_list(params["theta_frac"])]
        for theta in thetas:
            spec = _build(config, lambda: BarrierSpec(geometry, theta), "params")
            for dist in distances:
                v, err = frac_laplacian_barrier(spec, KernelSpec(), alpha,
                                                dist, qcfg, with_err=True)
                rows.append((alpha, theta, dist, v, err))
    return ("alpha", "theta", "distance", "value", "err_bound"), rows, {}


def _run_ratio(config):
    prob = _problem_from(config)
    pcfg = _path_config_from(config)
    params = _params(config, "x_grid")
    res = _build(config,
                 lambda: ratio_profile(params["x_grid"], prob, pcfg,
                                       config["n_paths"], seed=config["seed"],
                                       threads=config["threads"]),
                 "problem")
    rows = [(r.x, r.e_tau, r.denominator, r.ratio, r.stderr) for r in res]
    return ("x", "e_tau", "denominator", "ratio", "stderr"), rows, {}


def _run_decay(config):
    prob = _problem_from(config)
    pcfg = _path_config_from(config)
    params = _params(config, "t", "x_grid")
    res = boundary_decay_profile(params["t"], prob, pcfg, config["n_paths"],
                                 params["x_grid"],
                                 theta=float(params.get("theta", 0.5)),
                                 seed=config["seed"], threads=config["threads"])
    rows = [(r.x, r.d_x, r.u_abs, r.stderr, r.ratio_linear, r.ratio_theta)
            for r in res.rows]
    extras = {"theta": res.theta, "loglog_slope": res.loglog_slope}
    return ("x", "d_x", "u_abs", "stderr", "ratio_linear", "ratio_theta"), rows, extras


_RUNNERS = {
    "exit-time": _run_exit_time,
    "exit-position": _run_exit_position,
    "solve-mc": _run_solve_mc,
    "solve-fd": _run_solve_fd,
    "barrier": _run_barrier,
    "ratio": _run_ratio,
    "decay": _run_decay,
}


def _versions() -> dict:
    from importlib.metadata import PackageNotFoundError, version
    try:
        own = version("stableexit")
    except PackageNotFoundError:
        own = "unknown"
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "stableexit": own}


def _run_config(config: dict, overrides: dict) -> int:
    config = dict(config)
    for key, value in overrides.items():
        if value is not None:
            config[key] = value
    config.setdefault("seed", 0)
    config.setdefault("threads", 1)
    config.setdefault("n_paths", 10_000)
    _validate(config)

    kind = config["kind"]
    name = config.get("name", kind.replace("-", "_"))
    out_dir = config.get("output_dir", ".")
    csv_path = os.path.join(out_dir, f"{name}.csv")
    manifest_path = os.path.join(out_dir, f"{name}_manifest.json")
    manifest = {
        "name": name,
        "kind": kind,
        "config_hash": config_hash(config),
        "seed": config["seed"],
        "threads": config["threads"],
        "n_paths": config["n_paths"],
        "versions": _versions(),
    }
    t0 = time.perf_counter()
    try:
        header, rows, extras = _RUNNERS[kind](config)
    except ConfigError:
        raise
    except Exception as e:  # runtime failure: record it, exit nonzero
        manifest.update(error=f"{type(e).__name__}: {e}",
                        wall_time_s=time.perf_counter() - t0)
        write_manifest(manifest_path, manifest)
        click.echo(f"error: {e}", err=True)
        return EXIT_RUNTIME
    manifest.update(extras)
    manifest["wall_time_s"] = time.perf_counter() - t0
    manifest["artifacts"] = [os.path.basename(csv_path)]
    write_csv(csv_path, header, rows)
    write_manifest(manifest_path, manifest)
    click.echo(f"wrote {csv_path} ({len(rows)} rows) and {manifest_path}")
    criteria = manifest.get("criteria", {})
    if any(not c["passed"] for c in criteria.values()):
        click.echo("named checks failed: "
                   + ", ".join(k for k, c in criteria.items() if not c["passed"]),
                   err=True)
        return EXIT_CHECK
    return EXIT_OK


# --- preset configs ---------------------------------------------------------

def _interval_problem(alpha, drift_preset, phi=None, a=0.0, b=1.0):
    p = {"domain": {"variant": "interval", "a": a, "b": b},
         "drift": {"preset": drift_preset}, "alpha": alpha, "dim": 1}
    if phi is not None:
        p["phi"] = phi
    return p


def _surface_preset(name, drift_preset, phi):
    """One simulated solution surface: 50 x 50 points in (t, x]."""
    return {
        "name": name,
        "kind": "solve-fd",
        "problem": _interval_problem(0.5, drift_preset, phi),
        "cfg": {"N": 400},
        "params": {
            "t_grid": [(i + 1) / 50.0 for i in range(50)],
            "x_grid": [i / 51.0 for i in range(1, 51)],
        },
    }


def make_preset(name: str) -> dict:
    presets = {
        "figure1": lambda: {
            "name": "figure1",
            "kind": "ratio",
            "problem": _interval_problem(1.5, "constant-one"),
            "params": {"x_grid": [i / 20.0 for i in range(1, 20)]},
            "n_paths": 100_000,
        },
        "figure3": lambda: _surface_preset(
            "figure3", "mirror13", {"kind": "sin_affine", "params": [3.0, 0.0]}),
        "figure4": lambda: _surface_preset(
            "figure4", "example13",
            {"kind": "sin_affine", "params": [3.0, math.pi / 2.0]}),
        "figure5": lambda: _surface_preset(
            "figure5", "minusx",
            {"kind": "sin_affine", "params": [2.5, 2.5 * math.pi]}),
        "prop81": lambda: {
            "name": "prop81",
            "kind": "exit-position",
            "problem": _interval_problem(0.5, "constant-one"),
            "params": {"x0": 0.5, "eps_grid": [1e-2, 1e-3, 1e-4]},
            "n_paths": 100_000,
            "checks": "prop81",
        },
        "es34": lambda: {
            "name": "es34",
            "kind": "barrier",
            "params": {"shape": "halfspace", "alpha": [0.5, 1.0, 1.5],
                       "theta_frac": [0.25, 0.5, 0.75], "distance": [1.0]},
        },
    }
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; known: {sorted(presets)}")
    return presets[name]()


# --- click wiring -----------------------------------------------------------

def _common_options(fn):
    fn = click.option("--seed", type=int, default=None,
                      help="Override the config seed.")(fn)
    fn = click.option("--n-paths", type=int, default=None,
                      help="Override the config path count.")(fn)
    fn = click.option("--threads", type=int, default=None,
                      help="Worker threads (wall time only, never output bytes).")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None,
                      help="Output directory (overrides config output_dir).")(fn)
    return fn


def _overrides(seed, n_paths, threads, out):
    return {"seed": seed, "n_paths": n_paths, "threads": threads,
            "output_dir": out}


@click.group()
def main():
    """Exit-time simulation and nonlocal Dirichlet solvers for alpha-stable
    processes with drift."""


def _make_kind_command(kind: str):
    @main.command(kind, help=f"Run a {kind!r} experiment from a JSON config.")
    @click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
    @_common_options
    def _cmd(config_file, seed, n_paths, threads, out):
        config = _load_config(config_file)
        _validate(config)
        if config["kind"] != kind:
            raise ConfigError(f"config error at kind: config says "
                              f"{config['kind']!r} but subcommand is {kind!r}")
        sys.exit(_run_config(config, _overrides(seed, n_paths, threads, out)))
    return _cmd


for _kind in KINDS:
    _make_kind_command(_kind)


@main.command("preset")
@click.argument("name")
@_common_options
def preset_cmd(name, seed, n_paths, threads, out):
    """Run a named preset experiment (figure1, figure3-5, prop81, es34)."""
    config = make_preset(name)
    overrides = _overrides(seed, n_paths, threads, out)
    out_dir = overrides["output_dir"] or config.get("output_dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    snapshot = dict(config)
    snapshot.update({k: v for k, v in overrides.items() if v is not None})
    with open(os.path.join(out_dir, f"{name}_config.json"), "w") as fh:
        json.dump(snapshot, fh, indent=2, sort_keys=True)
        fh.write("\n")
    sys.exit(_run_config(config, overrides))


@main.command("verify")
@click.option("--out", type=click.Path(file_okay=False), default="acceptance_out",
              show_default=True, help="Directory for acceptance artifacts.")
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--scale", type=float, default=1.0, show_default=True,
              help="Path-count scale for smoke runs; only 1.0 is authoritative.")
@click.option("--criteria", "criteria", type=int, multiple=True,
              help="Run only these criterion numbers (repeatable).")
def verify_cmd(out, seed, threads, scale, criteria):
    """Run the acceptance suite and report one pass/fail line per criterion."""
    from .acceptance import run_suite
    t0 = time.perf_counter()
    try:
        results = run_suite(out_dir=out, seed=seed, threads=threads,
                            scale=scale, criteria=list(criteria) or None)
    except Exception as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_RUNTIME)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        click.echo(f"[{status}] criterion {r.number} ({r.name}): {r.details}")
    manifest = {
        "kind": "verify",
        "seed": seed,
        "threads": threads,
        "scale": scale,
        "versions": _versions(),
        "wall_time_s": time.perf_counter() - t0,
        "criteria": {str(r.number): {"name": r.name, "passed": r.passed,
                                     "details": r.details} for r in results},
    }
    write_manifest(os.path.join(out, "acceptance_manifest.json"), manifest)
    n_fail = sum(not r.passed for r in results)
    click.echo(f"{len(results) - n_fail}/{len(results)} criteria passed")
    sys.exit(EXIT_CHECK if n_fail else EXIT_OK)


if __name__ == "__main__":
    main()
