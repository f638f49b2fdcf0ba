"""Geometry of the open set D and the drift field b.

Supported domains are intervals, balls and half-spaces: every experiment
lives on one of these, and all three have closed-form signed distance and
outward normals.  The boundary classification splits the boundary by the
sign of b(z) . n(z), which governs whether simulated paths can touch the
boundary and how the solution decays there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "Interval",
    "Ball",
    "HalfSpace",
    "DriftSpec",
    "BoundaryLabel",
    "BoundaryClass",
    "signed_distance",
    "outward_normal",
    "classify_boundary",
]

BOUNDARY_TOL = 1e-9
CLASSIFY_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"interval needs a < b, got ({self.a}, {self.b})")

    dim = 1

    @property
    def bounded(self) -> bool:
        return True

    @property
    def diameter(self) -> float:
        return self.b - self.a

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        return np.minimum(x - self.a, self.b - x)

    def contains(self, x):
        return self.signed_distance(x) > 0.0

    def boundary_components(self):
        return {"left": self.a, "right": self.b}

    def to_json(self):
        return {"variant": "interval", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def bounded(self) -> bool:
        return True

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        c = np.asarray(self.center)
        if self.dim == 1:
            return self.radius - np.abs(x - c[0])
        return self.radius - np.linalg.norm(x - c, axis=-1)

    def contains(self, x):
        return self.signed_distance(x) > 0.0

    def boundary_components(self):
        return {"sphere": None}

    def to_json(self):
        return {"variant": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class HalfSpace:
    """Points x with x . normal > offset (so {x1 > 0} is HalfSpace(e1, 0));
    the outward normal of D is then -normal."""

    normal: tuple
    offset: float = 0.0

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.normal, dtype=float))
        norm = np.linalg.norm(n)
        if not np.isclose(norm, 1.0, atol=1e-9):
            raise ValueError("half-space normal must have unit norm")
        object.__setattr__(self, "normal", tuple(n))

    @property
    def dim(self) -> int:
        return len(self.normal)

    @property
    def bounded(self) -> bool:
        return False

    @property
    def diameter(self) -> float:
        return np.inf

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        n = np.asarray(self.normal)
        if self.dim == 1:
            return n[0] * x - self.offset
        return x @ n - self.offset

    def contains(self, x):
        return self.signed_distance(x) > 0.0

    def boundary_components(self):
        return {"plane": None}

    def to_json(self):
        return {"variant": "halfspace", "normal": list(self.normal), "offset": self.offset}


DomainSpec = Interval | Ball | HalfSpace


def domain_from_json(obj) -> "DomainSpec":
    variant = obj.get("variant")
    if variant == "interval":
        return Interval(obj["a"], obj["b"])
    if variant == "ball":
        return Ball(tuple(obj["center"]), obj["radius"])
    if variant == "halfspace":
        return HalfSpace(tuple(obj["normal"]), obj.get("offset", 0.0))
    raise ValueError(f"unknown domain variant {variant!r}")


def signed_distance(domain, x):
    """Distance to D^c, positive inside D, negative outside, zero on the boundary."""
    return domain.signed_distance(x)


def require_bounded(domain):
    if not domain.bounded:
        raise ValueError("operation requires a bounded domain")


def outward_normal(domain, z, tol: float = BOUNDARY_TOL):
    """Unit outward normal at a boundary point z."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if abs(float(signed_distance(domain, z if z.size > 1 else z[0]))) > tol:
        raise ValueError("point is not on the boundary within tolerance")
    if isinstance(domain, Interval):
        return np.array([-1.0]) if abs(z[0] - domain.a) <= tol else np.array([1.0])
    if isinstance(domain, Ball):
        v = z - np.asarray(domain.center)
        return v / np.linalg.norm(v)
    if isinstance(domain, HalfSpace):
        return -np.asarray(domain.normal)
    raise TypeError(f"unknown domain {type(domain)!r}")


# Named drift presets used by the shipped experiments: example13 is
# b(x) = x - 1/2, mirror13 its reflection, minusx is b(x) = -x.
_PRESETS_1D = {
    "constant-one": (0.0, 1.0),
    "example13": (1.0, -0.5),
    "mirror13": (-1.0, 0.5),
    "minusx": (-1.0, 0.0),
    "zero": (0.0, 0.0),
}


@dataclass(frozen=True)
class DriftSpec:
    """Affine drift b(x) = A x + c."""

    matrix: tuple
    shift: tuple
    name: str | None = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        c = np.atleast_1d(np.asarray(self.shift, dtype=float))
        if a.shape != (c.size, c.size):
            raise ValueError("drift matrix must be square and match the shift size")
        object.__setattr__(self, "matrix", tuple(map(tuple, a)))
        object.__setattr__(self, "shift", tuple(c))

    @classmethod
    def preset(cls, name: str, dim: int = 1) -> "DriftSpec":
        if name not in _PRESETS_1D:
            raise ValueError(f"unknown drift preset {name!r}; known: {sorted(_PRESETS_1D)}")
        if dim != 1:
            raise ValueError("named presets are one-dimensional")
        a, c = _PRESETS_1D[name]
        return cls(matrix=((a,),), shift=(c,), name=name)

    @classmethod
    def zero(cls, dim: int = 1) -> "DriftSpec":
        return cls(matrix=tuple(tuple(0.0 for _ in range(dim)) for _ in range(dim)),
                   shift=tuple(0.0 for _ in range(dim)), name="zero")

    @property
    def dim(self) -> int:
        return len(self.shift)

    @property
    def is_zero(self) -> bool:
        return not (np.any(np.asarray(self.matrix)) or np.any(np.asarray(self.shift)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a = np.asarray(self.matrix)
        c = np.asarray(self.shift)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1:] != (1,)):
            return a[0, 0] * x + c[0]
        return x @ a.T + c

    def sup_norm_on(self, domain) -> float:
        """sup_D |b| in closed form for affine b on interval/ball."""
        a = np.asarray(self.matrix)
        c = np.asarray(self.shift)
        if isinstance(domain, Interval):
            vals = [abs(a[0, 0] * e + c[0]) for e in (domain.a, domain.b)]
            return max(vals)
        if isinstance(domain, Ball):
            ctr = np.asarray(domain.center)
            # |A x + c| <= |A ctr + c| + ||A|| r, attained on the sphere for affine b
            return float(np.linalg.norm(a @ ctr + c) + np.linalg.norm(a, 2) * domain.radius)
        raise ValueError("sup norm requires a bounded domain")

    def to_json(self):
        if self.name is not None:
            return {"preset": self.name}
        return {"matrix": [list(r) for r in self.matrix], "shift": list(self.shift)}

    @classmethod
    def from_json(cls, obj) -> "DriftSpec":
        if "preset" in obj:
            return cls.preset(obj["preset"], obj.get("dim", 1))
        return cls(matrix=tuple(map(tuple, obj["matrix"])), shift=tuple(obj["shift"]))


class BoundaryLabel(Enum):
    GAMMA_LESS = "gamma_less"
    GAMMA_EQ = "gamma_eq"
    GAMMA_GREATER = "gamma_greater"


@dataclass(frozen=True)
class BoundaryClass:
    label: BoundaryLabel
    value: float


def classify_boundary(domain, drift: DriftSpec, z, tol: float = CLASSIFY_TOL) -> BoundaryClass:
    """Classify a boundary point by the sign of b(z) . n(z)."""
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    n = outward_normal(domain, z)
    b = np.atleast_1d(drift(z if z.size > 1 else z[0]))
    value = float(b @ n)
    if abs(value) <= tol:
        label = BoundaryLabel.GAMMA_EQ
    elif value > 0:
        label = BoundaryLabel.GAMMA_GREATER
    else:
        label = BoundaryLabel.GAMMA_LESS
    return BoundaryClass(label=label, value=value)
