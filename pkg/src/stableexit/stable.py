"""Exact samplers for symmetric alpha-stable increments.

Normalization is fixed throughout the package: an increment over time t has
characteristic function exp(-t |xi|^alpha), i.e. the process generated by
the fractional Laplacian with the same convention as the closed-form
Getoor/Dyda oracles used elsewhere.

One-dimensional draws use the Chambers-Mallows-Stuck transform (with the
dedicated Cauchy branch at alpha = 1).  Multi-dimensional isotropic draws
use Brownian subordination: sqrt(2 S) * G with S a one-sided alpha/2-stable
subordinator draw (Kanter's method) and G standard Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RngStream

__all__ = [
    "StableLaw",
    "sample_sym_stable_1d",
    "sample_pos_stable",
    "sample_isotropic_increment",
]


@dataclass(frozen=True)
class StableLaw:
    """Driving noise: stability index alpha in (0, 2) and dimension."""

    alpha: float
    dim: int = 1

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must lie strictly in (0, 2), got {self.alpha}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


def _generator(stream) -> np.random.Generator:
    if isinstance(stream, RngStream):
        return stream.generator
    if isinstance(stream, np.random.Generator):
        return stream
    raise TypeError(f"expected RngStream or numpy Generator, got {type(stream)!r}")


def sym_stable_from_uniforms(alpha: float, u01: np.ndarray, e: np.ndarray) -> np.ndarray:
    """CMS transform: uniforms in [0,1) and Exp(1) draws to standard
    symmetric alpha-stable draws with characteristic function e^{-|xi|^alpha}."""
    u = (np.asarray(u01) - 0.5) * np.pi  # uniform on (-pi/2, pi/2)
    if alpha == 1.0:
        return np.tan(u)
    inv = 1.0 / alpha
    return (
        np.sin(alpha * u)
        / np.cos(u) ** inv
        * (np.cos((1.0 - alpha) * u) / e) ** (inv - 1.0)
    )


def pos_stable_from_uniforms(a: float, u01: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Kanter's transform: draws of the one-sided stable law with Laplace
    transform e^{-lambda^a}, a in (0, 1)."""
    # u = 0 would give a zero draw of probability zero; nudge off the corner
    u = np.clip(np.asarray(u01), 1e-300, None) * np.pi
    ratio = (
        np.sin(a * u) ** (a / (1.0 - a))
        * np.sin((1.0 - a) * u)
        / np.sin(u) ** (1.0 / (1.0 - a))
    )
    return (ratio / e) ** ((1.0 - a) / a)


def _uniform_exp(gen: np.random.Generator, n: int):
    raw = gen.random((2, n))
    return raw[0], -np.log1p(-raw[1])


def sample_sym_stable_1d(alpha: float, scale: float, stream, size: int | None = None):
    """Draws distributed as scale^{1/alpha} * S, where S has characteristic
    function e^{-|xi|^alpha}.  `scale` plays the role of the elapsed time."""
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"alpha must lie strictly in (0, 2), got {alpha}")
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    gen = _generator(stream)
    n = 1 if size is None else int(size)
    u, e = _uniform_exp(gen, n)
    out = scale ** (1.0 / alpha) * sym_stable_from_uniforms(alpha, u, e)
    return float(out[0]) if size is None else out


def sample_pos_stable(alpha_half: float, scale: float, stream, size: int | None = None):
    """Strictly positive draws with Laplace transform e^{-scale * lambda^alpha_half}."""
    if not (0.0 < alpha_half < 1.0):
        raise ValueError(f"one-sided index must lie in (0, 1), got {alpha_half}")
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    gen = _generator(stream)
    n = 1 if size is None else int(size)
    u, e = _uniform_exp(gen, n)
    out = scale ** (1.0 / alpha_half) * pos_stable_from_uniforms(alpha_half, u, e)
    return float(out[0]) if size is None else out


def sample_isotropic_increment(law: StableLaw, dt: float, stream, size: int | None = None):
    """Rotationally invariant increment with characteristic function
    e^{-dt |xi|^alpha}, via subordinated Brownian motion."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    gen = _generator(stream)
    n = 1 if size is None else int(size)
    u, e = _uniform_exp(gen, n)
    s = dt ** (2.0 / law.alpha) * pos_stable_from_uniforms(law.alpha / 2.0, u, e)
    g = gen.standard_normal((n, law.dim))
    out = np.sqrt(2.0 * s)[:, None] * g
    return out[0] if size is None else out
