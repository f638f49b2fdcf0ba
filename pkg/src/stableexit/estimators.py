"""Monte-Carlo aggregation over simulated paths.

Sample moments are accumulated as exact rationals (floats are dyadic, so
sums of them are, too).  merge() is therefore exactly associative and the
pooled result is bit-identical for any grouping of the input chunks; the
parallel runner assigns path indices to fixed-size chunks and merges in
chunk order, which makes thread count a pure performance knob with zero
effect on output bytes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .domains import Ball, HalfSpace, Interval
from .paths import PathConfig, simulate_exit_batch, simulate_value_batch

__all__ = [
    "EstimatorResult",
    "merge",
    "ExitMomentsResult",
    "ExitPositionResult",
    "RatioRow",
    "DecayRow",
    "DecayResult",
    "estimate_exit_moments",
    "estimate_exit_position",
    "estimate_u",
    "ratio_profile",
    "boundary_decay_profile",
]

CHUNK_SIZE = 20000  # fixed: chunk boundaries must not depend on thread count


@dataclass(frozen=True)
class EstimatorResult:
    """Sample statistics with exact rational accumulators.

    s1 and s2 are the exact sums of the samples and their squares; all
    reported statistics derive from them, so pooling two results gives
    exactly the statistics of the pooled sample.
    """

    n: int
    s1: Fraction
    s2: Fraction

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("estimator needs at least one sample")

    @classmethod
    def from_samples(cls, samples) -> "EstimatorResult":
        arr = np.asarray(samples, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("estimator needs at least one sample")
        s1 = Fraction(0)
        s2 = Fraction(0)
        for v in arr.tolist():
            fv = Fraction(v)
            s1 += fv
            s2 += fv * fv
        return cls(n=int(arr.size), s1=s1, s2=s2)

    @property
    def mean(self) -> float:
        return float(self.s1 / self.n)

    @property
    def variance(self) -> float:
        if self.n < 2:
            return 0.0
        return float((self.s2 - self.s1 * self.s1 / self.n) / (self.n - 1))

    @property
    def stderr(self) -> float:
        return math.sqrt(max(self.variance, 0.0) / self.n)

    @property
    def ci95(self) -> tuple[float, float]:
        half = 1.96 * self.stderr
        return (self.mean - half, self.mean + half)


def merge(results) -> EstimatorResult:
    """Pooled statistics, exact and order-independent."""
    results = list(results)
    if not results:
        raise ValueError("merge of an empty list")
    n = sum(r.n for r in results)
    s1 = sum((r.s1 for r in results), Fraction(0))
    s2 = sum((r.s2 for r in results), Fraction(0))
    return EstimatorResult(n=n, s1=s1, s2=s2)


def _run_chunks(worker, n_paths: int, threads: int):
    """Apply worker(start, count) over fixed chunks; results in index order."""
    spans = [(s, min(CHUNK_SIZE, n_paths - s)) for s in range(0, n_paths, CHUNK_SIZE)]
    if threads <= 1 or len(spans) == 1:
        return [worker(s, m) for s, m in spans]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda sm: worker(*sm), spans))


@dataclass(frozen=True)
class ExitMomentsResult:
    moments: tuple          # EstimatorResult for orders 1..max_order
    censored: EstimatorResult  # mean is the censored fraction
    all_censored: bool      # degenerate-sample warning flag


def estimate_exit_moments(x0, problem, cfg: PathConfig, n_paths: int,
                          max_order: int = 1, seed: int = 0,
                          threads: int = 1, start_index: int = 0) -> ExitMomentsResult:
    """E_x (tau_D ^ horizon)^k for k = 1..max_order, with censored fraction."""
    if n_paths < 100:
        raise ValueError("need at least 100 paths")
    if max_order < 1:
        raise ValueError("max_order must be >= 1")

    def worker(start, count):
        out = simulate_exit_batch(x0, problem, cfg, seed, start_index + start, count)
        tau = out["tau"]
        per_order = [EstimatorResult.from_samples(tau ** k)
                     for k in range(1, max_order + 1)]
        cens = EstimatorResult.from_samples((out["kind"] == 2).astype(float))
        return per_order, cens

    parts = _run_chunks(worker, n_paths, threads)
    moments = tuple(merge([p[0][k] for p in parts]) for k in range(max_order))
    censored = merge([p[1] for p in parts])
    return ExitMomentsResult(moments=moments, censored=censored,
                             all_censored=censored.mean == 1.0)


def _component_distances(domain, x_exit):
    """Distance of each exit position to each named boundary component."""
    if isinstance(domain, Interval):
        return {"left": np.abs(x_exit - domain.a),
                "right": np.abs(x_exit - domain.b)}
    if isinstance(domain, Ball):
        c = np.asarray(domain.center)
        r = (np.abs(x_exit - c[0]) if domain.dim == 1
             else np.linalg.norm(x_exit - c, axis=-1))
        return {"sphere": np.abs(r - domain.radius)}
    if isinstance(domain, HalfSpace):
        return {"plane": np.abs(domain.signed_distance(x_exit))}
    raise TypeError(f"unknown domain {type(domain)!r}")


@dataclass(frozen=True)
class ExitPositionResult:
    rows: tuple             # (eps, component, fraction) per eps per component
    histogram: tuple        # (counts, bin_edges) of exit positions in D^c
    n_exits: int
    censored_frac: float


def estimate_exit_position(x0, problem, cfg: PathConfig, n_paths: int,
                           eps_grid, seed: int = 0,
                           threads: int = 1) -> ExitPositionResult:
    """Per epsilon: fraction of (non-censored) exits landing within epsilon
    of each boundary component, plus a histogram of the exit positions."""
    if n_paths < 100:
        raise ValueError("need at least 100 paths")
    eps_grid = [float(e) for e in eps_grid]
    if any(e <= 0 for e in eps_grid):
        raise ValueError("eps values must be positive")

    def worker(start, count):
        out = simulate_exit_batch(x0, problem, cfg, seed, start, count)
        exited = out["kind"] != 2
        return out["x_exit"][exited], int(count - exited.sum())

    parts = _run_chunks(worker, n_paths, threads)
    x_exit = np.concatenate([p[0] for p in parts])
    n_cens = sum(p[1] for p in parts)
    n_exits = x_exit.shape[0]
    if n_exits == 0:
        raise ValueError("all paths censored; raise the horizon")

    dists = _component_distances(problem.domain, x_exit)
    rows = tuple((eps, comp, float(np.count_nonzero(d <= eps)) / n_exits)
                 for eps in eps_grid for comp, d in dists.items())
    hist_data = x_exit if problem.law.dim == 1 else np.linalg.norm(x_exit, axis=-1)
    counts, edges = np.histogram(hist_data, bins=50)
    return ExitPositionResult(rows=rows, histogram=(counts, edges),
                              n_exits=n_exits,
                              censored_frac=n_cens / n_paths)


def estimate_u(t: float, x0, problem, cfg: PathConfig, n_paths: int,
               seed: int = 0, threads: int = 1, start_index: int = 0) -> EstimatorResult:
    """Feynman-Kac estimate of u(t, x0)."""
    if n_paths < 100:
        raise ValueError("need at least 100 paths")

    def worker(start, count):
        out = simulate_value_batch(x0, t, problem, cfg, seed, start_index + start, count)
        return EstimatorResult.from_samples(out["sample"])

    return merge(_run_chunks(worker, n_paths, threads))


def theoretical_denominator(alpha: float, x: float) -> float:
    """Ratio-profile denominator on D = (0,1) with b = 1: d_x^{alpha/2} in
    the sub/critical regime, min(1/2, 1-x) in the supercritical one."""
    if alpha >= 1.0:
        return min(x, 1.0 - x) ** (alpha / 2.0)
    return min(0.5, max(1.0 - x, 0.0))


@dataclass(frozen=True)
class RatioRow:
    x: float
    e_tau: float
    denominator: float
    ratio: float
    stderr: float


def ratio_profile(x_grid, problem, cfg: PathConfig, n_paths_per_point: int,
                  seed: int = 0, threads: int = 1) -> list[RatioRow]:
    """E_x tau / theoretical denominator across an x-grid: flat when the
    denominator captures the true boundary rate."""
    dom = problem.domain
    if not (isinstance(dom, Interval) and dom.a == 0.0 and dom.b == 1.0):
        raise ValueError("ratio profile is defined on D = (0, 1)")
    if problem.drift.name != "constant-one":
        raise ValueError("ratio profile requires the constant-one drift preset")
    rows = []
    for j, x in enumerate(float(v) for v in x_grid):
        if not 0.0 < x < 1.0:
            raise ValueError(f"grid point {x} outside (0, 1)")
        # disjoint stream index range per grid point
        res = estimate_exit_moments(x, problem, cfg, n_paths_per_point,
                                    max_order=1, seed=seed, threads=threads,
                                    start_index=j * n_paths_per_point)
        den = theoretical_denominator(problem.law.alpha, x)
        est = res.moments[0]
        rows.append(RatioRow(x=x, e_tau=est.mean, denominator=den,
                             ratio=est.mean / den, stderr=est.stderr))
    return rows


@dataclass(frozen=True)
class DecayRow:
    x: float
    u_abs: float
    stderr: float
    d_x: float
    ratio_linear: float
    ratio_theta: float


@dataclass(frozen=True)
class DecayResult:
    rows: tuple
    theta: float
    loglog_slope: float  # descriptive statistic only


def boundary_decay_profile(t: float, problem, cfg: PathConfig, n_paths: int,
                           x_grid, theta: float = 0.5, seed: int = 0,
                           threads: int = 1) -> DecayResult:
    """|u(t, x)| against the boundary distance along a near-boundary grid."""
    if not (0.0 < theta <= 1.0):
        raise ValueError("theta must lie in (0, 1]")
    rows = []
    for j, x in enumerate(float(v) for v in x_grid):
        d_x = float(problem.domain.signed_distance(x))
        if d_x <= 0.0:
            raise ValueError(f"grid point {x} not inside the domain")
        est = estimate_u(t, x, problem, cfg, n_paths, seed=seed,
                         threads=threads, start_index=j * n_paths)
        u_abs = abs(est.mean)
        rows.append(DecayRow(x=x, u_abs=u_abs, stderr=est.stderr, d_x=d_x,
                             ratio_linear=u_abs / d_x,
                             ratio_theta=u_abs / d_x ** theta))
    pos = [(r.d_x, r.u_abs) for r in rows if r.u_abs > 0.0]
    if len(pos) >= 2:
        lx = np.log([p[0] for p in pos])
        ly = np.log([p[1] for p in pos])
        slope = float(np.polyfit(lx, ly, 1)[0])
    else:
        slope = float("nan")
    return DecayResult(rows=tuple(rows), theta=theta, loglog_slope=slope)
