"""Problem data: initial/source function catalog and the full problem spec.

The catalog covers everything the experiments need: zero, constants,
sinusoids 1_D(x) sin(a pi x + b) in d = 1, and polynomials.  Initial data
is cut off outside D so the exterior condition u = 0 on D^c holds by
construction; source terms may carry an exponential time factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domains import DriftSpec, Interval
from .stable import StableLaw

__all__ = ["SpaceFunction", "TimeFactor", "SourceFunction", "ProblemSpec"]


@dataclass(frozen=True)
class SpaceFunction:
    """Catalog entry: zero | constant(c) | sin_affine(a, b) | polynomial(coeffs).

    sin_affine(a, b) means sin(a*pi*x + b) in d = 1; polynomial coefficients
    are ascending in x.
    """

    kind: str
    params: tuple = ()

    _KINDS = ("zero", "constant", "sin_affine", "polynomial")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown function kind {self.kind!r}; known: {self._KINDS}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        n = {"zero": 0, "constant": 1, "sin_affine": 2}.get(self.kind)
        if n is not None and len(self.params) != n:
            raise ValueError(f"{self.kind} takes {n} parameters, got {len(self.params)}")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, c: float):
        return cls("constant", (c,))

    @classmethod
    def sin_affine(cls, a: float, b: float):
        return cls("sin_affine", (a, b))

    @classmethod
    def polynomial(cls, coeffs):
        return cls("polynomial", tuple(coeffs))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind == "constant" and self.params[0] == 0.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.full_like(x, self.params[0])
        if self.kind == "sin_affine":
            a, b = self.params
            return np.sin(a * np.pi * x + b)
        return np.polynomial.polynomial.polyval(x, self.params)

    def sup_bound(self) -> float:
        """A crude global bound, exact for the trig/constant entries."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return abs(self.params[0])
        if self.kind == "sin_affine":
            return 1.0
        return float(np.sum(np.abs(self.params)))  # valid on |x| <= 1

    def to_json(self):
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["kind"], tuple(obj.get("params", ())))


@dataclass(frozen=True)
class TimeFactor:
    """h(t) = 1 or exp(-lam * t)."""

    kind: str = "one"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in ("one", "exp"):
            raise ValueError(f"time factor must be 'one' or 'exp', got {self.kind!r}")

    def __call__(self, t):
        if self.kind == "one":
            return np.ones_like(np.asarray(t, dtype=float))
        return np.exp(-self.lam * np.asarray(t, dtype=float))

    def to_json(self):
        return {"kind": self.kind, "lam": self.lam}

    @classmethod
    def from_json(cls, obj):
        return cls(obj.get("kind", "one"), obj.get("lam", 0.0))


@dataclass(frozen=True)
class SourceFunction:
    """Source f(t, x) = g(x) * h(t)."""

    space: SpaceFunction = field(default_factory=SpaceFunction.zero)
    time: TimeFactor = field(default_factory=TimeFactor)

    @property
    def is_zero(self) -> bool:
        return self.space.is_zero

    def __call__(self, t, x):
        return self.space(x) * self.time(t)

    def to_json(self):
        return {"space": self.space.to_json(), "time": self.time.to_json()}

    @classmethod
    def from_json(cls, obj):
        return cls(SpaceFunction.from_json(obj["space"]),
                   TimeFactor.from_json(obj.get("time", {"kind": "one"})))


@dataclass(frozen=True)
class ProblemSpec:
    """Domain + drift + noise + data functions of one Dirichlet problem."""

    domain: object
    drift: DriftSpec
    law: StableLaw
    phi: SpaceFunction = field(default_factory=SpaceFunction.zero)
    f: SourceFunction = field(default_factory=SourceFunction)

    def phi_at(self, x):
        """Initial data, cut off outside D (exterior condition u = 0 on D^c)."""
        vals = self.phi(x)
        inside = self.domain.signed_distance(x) > 0.0
        return np.where(inside, vals, 0.0)

    def f_at(self, t, x):
        return self.f(t, x)

    def to_json(self):
        return {
            "domain": self.domain.to_json(),
            "drift": self.drift.to_json(),
            "alpha": self.law.alpha,
            "dim": self.law.dim,
            "phi": self.phi.to_json(),
            "f": self.f.to_json(),
        }

    @classmethod
    def from_json(cls, obj) -> "ProblemSpec":
        from .domains import domain_from_json

        dim = int(obj.get("dim", 1))
        return cls(
            domain=domain_from_json(obj["domain"]),
            drift=DriftSpec.from_json(obj["drift"]) if "drift" in obj else DriftSpec.zero(dim),
            law=StableLaw(float(obj["alpha"]), dim),
            phi=SpaceFunction.from_json(obj["phi"]) if "phi" in obj else SpaceFunction.zero(),
            f=SourceFunction.from_json(obj["f"]) if "f" in obj else SourceFunction(),
        )

    @classmethod
    def example13(cls, alpha: float = 0.5):
        """d = 1, D = (0,1), b(x) = x - 1/2, phi = 1_D sin(3 pi x + pi/2)."""
        return cls(
            domain=Interval(0.0, 1.0),
            drift=DriftSpec.preset("example13"),
            law=StableLaw(alpha, 1),
            phi=SpaceFunction.sin_affine(3.0, np.pi / 2.0),
        )
