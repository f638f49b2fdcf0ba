"""Euler-type simulation of dX = b(X) dt + dZ until exit from D.

Z is the isotropic alpha-stable noise (exact increments, no Gaussian
surrogate).  Each path owns one counter-based random stream keyed by its
path index, and consumes exactly one draw column per step, so a path's
trajectory is a pure function of (seed, path index) regardless of how
paths are batched or which thread runs them.

The batch engine steps many paths in lockstep with numpy, refilling each
path's draw cache every `block` steps and compacting the working arrays
as paths exit.  The scalar API (simulate_until_exit, simulate_value) is a
thin wrapper over batches of size one, so both views agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .domains import require_bounded
from .rng import RngStream, make_generator
from .stable import pos_stable_from_uniforms, sym_stable_from_uniforms

__all__ = [
    "PathConfig",
    "ExitKind",
    "ExitRecord",
    "PathFunctionalSample",
    "StepResult",
    "step",
    "simulate_until_exit",
    "simulate_value",
    "simulate_exit_batch",
    "simulate_value_batch",
    "trace_path",
]

HORIZON_DIAMETERS = 50.0  # default censoring horizon: 50 * lambda_D^alpha
_BLOCK = 256              # draw-cache depth in steps


@dataclass(frozen=True)
class PathConfig:
    """Discretization knobs for the Euler scheme.

    When adaptive is set, the step shrinks proportionally to the distance
    to the boundary, dt = clamp(dt_base * d_x / (lambda_D/4), dt_min,
    dt_base), resolving drift-driven boundary hits.  horizon = None means
    the default 50 * lambda_D^alpha censoring time; jump_threshold = None
    means 10 * touch_eps.
    """

    dt_base: float = 1e-3
    dt_min: float = 1e-6
    adaptive: bool = True
    horizon: float | None = None
    touch_eps: float = 1e-3
    jump_threshold: float | None = None

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_base):
            raise ValueError("need 0 < dt_min <= dt_base")
        if self.horizon is not None and self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.touch_eps <= 0:
            raise ValueError("touch_eps must be positive")
        if self.jump_threshold is not None and self.jump_threshold <= 0:
            raise ValueError("jump_threshold must be positive")

    @property
    def jump_cut(self) -> float:
        return self.jump_threshold if self.jump_threshold is not None else 10.0 * self.touch_eps

    def horizon_for(self, problem) -> float:
        if self.horizon is not None:
            return self.horizon
        require_bounded(problem.domain)
        return HORIZON_DIAMETERS * problem.domain.diameter ** problem.law.alpha


class ExitKind(Enum):
    JUMP = "jump"
    DRIFT_CROSS = "drift_cross"
    CENSORED = "censored"


_KIND_CODES = {0: ExitKind.JUMP, 1: ExitKind.DRIFT_CROSS, 2: ExitKind.CENSORED}


@dataclass(frozen=True)
class ExitRecord:
    tau: float
    x_exit: np.ndarray
    x_pre: np.ndarray
    exit_kind: ExitKind
    touched_boundary: bool


@dataclass(frozen=True)
class PathFunctionalSample:
    survived: bool
    phi_term: float
    running_term: float

    @property
    def value(self) -> float:
        return self.phi_term + self.running_term


@dataclass(frozen=True)
class StepResult:
    x_next: np.ndarray
    drift_part: np.ndarray
    jump_part: np.ndarray


def step(x, dt: float, drift, law, stream) -> StepResult:
    """One Euler step x' = x + b(x) dt + dZ(dt).

    law = None suppresses the jump part (deterministic-flow test mode).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    b = np.zeros_like(x) if drift is None else np.asarray(drift(x), dtype=float)
    if law is None:
        dz = np.zeros_like(x)
    else:
        gen = stream.generator if isinstance(stream, RngStream) else stream
        raw = gen.random((2, 1))
        u, e = raw[0], -np.log1p(-raw[1])
        if law.dim == 1:
            dz = dt ** (1.0 / law.alpha) * sym_stable_from_uniforms(law.alpha, u, e)
            dz = dz.reshape(x.shape) if x.shape else dz[0]
        else:
            s = dt ** (2.0 / law.alpha) * pos_stable_from_uniforms(law.alpha / 2.0, u, e)
            dz = np.sqrt(2.0 * s) * gen.standard_normal(law.dim)
    drift_part = b * dt
    return StepResult(x_next=x + drift_part + dz, drift_part=drift_part, jump_part=dz)


class _DrawCache:
    """Per-path draw blocks; one column consumed per lockstep iteration.

    Rows are addressed through a row map so that dropping exited paths is
    O(active); the block arrays themselves are rebuilt only when fewer
    than half their rows are still alive.
    """

    def __init__(self, seed: int, start_index: int, n: int, dim: int):
        self.gens = [make_generator(seed, start_index + i) for i in range(n)]
        self.dim = dim
        self.rows = np.arange(n)  # cache row of each working path
        self.ue = np.empty((n, _BLOCK, 2))  # per step: uniform, Exp(1)
        self.g = np.empty((n, _BLOCK, dim)) if dim > 1 else None

    def refill(self):
        rows = self.rows
        for r in rows:
            self.ue[r] = self.gens[r].random((_BLOCK, 2))
            if self.g is not None:
                self.g[r] = self.gens[r].standard_normal((_BLOCK, self.dim))
        self.ue[rows, :, 1] = -np.log1p(-self.ue[rows, :, 1])

    def draw_columns(self, col: int):
        cols = self.ue[self.rows, col, :]
        return cols[:, 0], cols[:, 1]

    def normal_columns(self, col: int):
        return self.g[self.rows, col, :]

    def drop(self, keep: np.ndarray):
        self.rows = self.rows[keep]
        if self.rows.size < self.ue.shape[0] // 2:
            self.gens = [self.gens[r] for r in self.rows]
            self.ue = np.ascontiguousarray(self.ue[self.rows])
            if self.g is not None:
                self.g = np.ascontiguousarray(self.g[self.rows])
            self.rows = np.arange(self.rows.size)


def _increment(law, dt: np.ndarray, cache: _DrawCache, col: int) -> np.ndarray:
    u, e = cache.draw_columns(col)
    if law.dim == 1:
        return dt ** (1.0 / law.alpha) * sym_stable_from_uniforms(law.alpha, u, e)
    s = dt ** (2.0 / law.alpha) * pos_stable_from_uniforms(law.alpha / 2.0, u, e)
    return np.sqrt(2.0 * s)[:, None] * cache.normal_columns(col)


def _jump_norm(dz: np.ndarray, dim: int) -> np.ndarray:
    return np.abs(dz) if dim == 1 else np.linalg.norm(dz, axis=-1)


def _simulate_batch(x0, problem, cfg: PathConfig, seed: int, start_index: int,
                    n: int, t_final: float | None):
    """Lockstep engine.  t_final = None runs exit mode (censor at the
    horizon); otherwise value mode (functional of Eq. u(t, x), stop at t)."""
    domain, drift, law = problem.domain, problem.drift, problem.law
    dim = law.dim
    alpha = law.alpha
    value_mode = t_final is not None
    horizon = float(t_final) if value_mode else cfg.horizon_for(problem)
    d_ref = domain.diameter / 4.0 if domain.bounded else 1.0
    has_drift = drift is not None and not drift.is_zero
    has_f = value_mode and not problem.f.is_zero

    x0 = np.asarray(x0, dtype=float)
    if float(domain.signed_distance(x0 if dim > 1 else float(x0))) <= 0.0:
        raise ValueError("start point must lie inside the domain")
    x = np.broadcast_to(x0, (n, dim) if dim > 1 else (n,)).astype(float).copy()
    elapsed = np.zeros(n)
    running = np.zeros(n)
    idx = np.arange(n)  # original path index of each working row
    cache = _DrawCache(seed, start_index, n, dim)

    tau = np.full(n, np.nan)
    x_exit = np.full_like(np.broadcast_to(x0, (n, dim) if dim > 1 else (n,)), np.nan, dtype=float)
    x_pre = np.full_like(x_exit, np.nan)
    kind = np.full(n, -1, dtype=np.int8)
    touched = np.zeros(n, dtype=bool)
    survived = np.zeros(n, dtype=bool)
    phi_term = np.zeros(n)

    def finalize_exit(rows, t_now, xe, xp, dz_norm):
        j = idx[rows]
        tau[j] = t_now
        x_exit[j] = xe
        x_pre[j] = xp
        sd = np.abs(domain.signed_distance(xe))
        near = sd <= cfg.touch_eps
        touched[j] = near
        kind[j] = np.where((dz_norm <= cfg.jump_cut) & near, 1, 0)

    s = 0
    while idx.size:
        col = s % _BLOCK
        if col == 0:
            cache.refill()

        d_x = domain.signed_distance(x)
        if cfg.adaptive:
            dt = np.clip(cfg.dt_base * d_x / d_ref, cfg.dt_min, cfg.dt_base)
        else:
            dt = np.full(idx.size, cfg.dt_base)

        if value_mode:
            t_rem = horizon - elapsed
            last = dt >= t_rem
            dt = np.minimum(dt, t_rem)
        else:
            # censor before stepping so trajectories are horizon-independent
            cens = elapsed + dt > horizon
            if np.any(cens):
                j = idx[cens]
                tau[j] = horizon
                x_exit[j] = x[cens]
                x_pre[j] = x[cens]
                kind[j] = 2
                keep = ~cens
                x, elapsed, dt, idx = x[keep], elapsed[keep], dt[keep], idx[keep]
                cache.drop(keep)
                if not idx.size:
                    break

        dz = _increment(law, dt, cache, col)
        b_dt = (np.asarray(drift(x), dtype=float) * (dt[:, None] if dim > 1 else dt)
                if has_drift else 0.0)
        xn = x + b_dt + dz
        t_now = elapsed + dt

        if has_f:
            f_old = np.asarray(problem.f_at(horizon - elapsed, x), dtype=float)
            f_new = np.asarray(problem.f_at(horizon - t_now, xn), dtype=float)
            running[idx] += 0.5 * (f_old + f_new) * dt

        sdn = domain.signed_distance(xn)
        exited = sdn <= 0.0
        if np.any(exited):
            finalize_exit(exited, t_now[exited], xn[exited], x[exited],
                          _jump_norm(dz[exited], dim))

        if value_mode:
            done_alive = ~exited & last
            if np.any(done_alive):
                j = idx[done_alive]
                survived[j] = True
                phi_term[j] = np.asarray(problem.phi_at(xn[done_alive]), dtype=float)
            done = exited | done_alive
        else:
            done = exited

        if np.any(done):
            keep = ~done
            x, elapsed, idx = xn[keep], t_now[keep], idx[keep]
            cache.drop(keep)
        else:
            x, elapsed = xn, t_now
        s += 1

    out = {
        "tau": tau, "x_exit": x_exit, "x_pre": x_pre, "kind": kind,
        "touched": touched,
    }
    if value_mode:
        out["survived"] = survived
        out["phi_term"] = phi_term
        out["running_term"] = running
        out["sample"] = phi_term + running
    return out


def simulate_exit_batch(x0, problem, cfg: PathConfig, seed: int,
                        start_index: int, n: int) -> dict:
    """Exit records for paths start_index .. start_index + n - 1 as arrays:
    tau, x_exit, x_pre, kind (0 jump, 1 drift-cross, 2 censored), touched."""
    return _simulate_batch(x0, problem, cfg, seed, start_index, n, t_final=None)


def simulate_value_batch(x0, t: float, problem, cfg: PathConfig, seed: int,
                         start_index: int, n: int) -> dict:
    """Feynman-Kac samples phi(X_t) 1{tau > t} + int_0^{t and tau} f(t-s, X_s) ds."""
    if t <= 0:
        raise ValueError("t must be positive")
    if cfg.horizon is not None and t > cfg.horizon:
        raise ValueError("t must not exceed the configured horizon")
    return _simulate_batch(x0, problem, cfg, seed, start_index, n, t_final=t)


def simulate_until_exit(x0, problem, cfg: PathConfig, stream: RngStream) -> ExitRecord:
    out = simulate_exit_batch(x0, problem, cfg, stream.seed, stream.stream_index, 1)
    return ExitRecord(
        tau=float(out["tau"][0]),
        x_exit=out["x_exit"][0],
        x_pre=out["x_pre"][0],
        exit_kind=_KIND_CODES[int(out["kind"][0])],
        touched_boundary=bool(out["touched"][0]),
    )


def simulate_value(x0, t: float, problem, cfg: PathConfig,
                   stream: RngStream) -> PathFunctionalSample:
    out = simulate_value_batch(x0, t, problem, cfg, stream.seed, stream.stream_index, 1)
    return PathFunctionalSample(
        survived=bool(out["survived"][0]),
        phi_term=float(out["phi_term"][0]),
        running_term=float(out["running_term"][0]),
    )


def trace_path(x0, problem, cfg: PathConfig, stream: RngStream, csv_path: str) -> ExitRecord:
    """Debug helper: single-path simulation dumping (t, x, dt, jump) rows."""
    import csv

    domain, drift, law = problem.domain, problem.drift, problem.law
    dim = law.dim
    gen = stream.generator
    horizon = cfg.horizon_for(problem)
    d_ref = domain.diameter / 4.0 if domain.bounded else 1.0
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    t = 0.0
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i + 1}" for i in range(dim)] + ["dt", "jump_magnitude"])
        w.writerow([0.0] + [float(v) for v in x] + [0.0, 0.0])
        while True:
            d_x = float(domain.signed_distance(x if dim > 1 else float(x[0])))
            dt = (float(np.clip(cfg.dt_base * d_x / d_ref, cfg.dt_min, cfg.dt_base))
                  if cfg.adaptive else cfg.dt_base)
            if t + dt > horizon:
                return ExitRecord(tau=horizon, x_exit=x, x_pre=x,
                                  exit_kind=ExitKind.CENSORED, touched_boundary=False)
            res = step(x, dt, drift, law, gen)
            xn = np.atleast_1d(res.x_next)
            t += dt
            jn = float(_jump_norm(res.jump_part, dim))
            w.writerow([t] + [float(v) for v in xn] + [dt, jn])
            sd = float(domain.signed_distance(xn if dim > 1 else float(xn[0])))
            if sd <= 0.0:
                near = abs(sd) <= cfg.touch_eps
                k = ExitKind.DRIFT_CROSS if (jn <= cfg.jump_cut and near) else ExitKind.JUMP
                return ExitRecord(tau=t, x_exit=xn, x_pre=x, exit_kind=k,
                                  touched_boundary=near)
            x = xn
