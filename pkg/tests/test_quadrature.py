import math

import numpy as np
import pytest

from stableexit.quadrature import (BallExteriorBarrier, BarrierSpec,
                                   HalfSpaceBarrier, IntervalBarrier,
                                   KernelSpec, QuadratureConfig,
                                   barrier_scaling_check, dyda_constant,
                                   find_sign_threshold,
                                   frac_laplacian_barrier,
                                   frac_laplacian_constant, nonlocal_apply_1d)

CFG = QuadratureConfig()


def test_constants_against_closed_forms():
    # C(d, alpha) = alpha 2^{alpha-1} Gamma((d+alpha)/2) / (pi^{d/2} Gamma(1-alpha/2))
    for alpha in (0.5, 1.0, 1.5):
        exact = (alpha * 2 ** (alpha - 1) * math.gamma((1 + alpha) / 2)
                 / (math.sqrt(math.pi) * math.gamma(1 - alpha / 2)))
        assert frac_laplacian_constant(alpha, 1) == pytest.approx(exact, rel=1e-14)
    # Dyda: C_{1,alpha} = 2^alpha Gamma(1+alpha/2) Gamma((1+alpha)/2) / Gamma(1/2)
    for alpha in (0.5, 1.2):
        exact = (2 ** alpha * math.gamma(1 + alpha / 2)
                 * math.gamma((1 + alpha) / 2) / math.gamma(0.5))
        assert dyda_constant(alpha) == pytest.approx(exact, rel=1e-14)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 1.9])
def test_halfspace_sign_pattern(alpha):
    """Negative below theta = alpha/2, zero at it, positive above."""
    vals = [frac_laplacian_barrier(BarrierSpec(HalfSpaceBarrier(), theta),
                                   KernelSpec(), alpha, 1.0, CFG)
            for theta in (alpha / 4, alpha / 2, 3 * alpha / 4)]
    assert vals[0] < -1e-5
    assert abs(vals[1]) < 1e-6
    assert vals[2] > 1e-5


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_sign_threshold_is_half_alpha(alpha):
    assert find_sign_threshold(alpha) == pytest.approx(alpha / 2, abs=1e-5)


def test_radial_kernel_threshold_interior():
    ker = KernelSpec("radial",
                     profile=lambda r: 1.0 + 0.5 * np.exp(-np.asarray(r, float)),
                     kappa0=2.0)
    t = find_sign_threshold(1.0, ker)
    assert 0.0 < t < 1.0


@pytest.mark.parametrize("alpha,theta,R", [(0.7, 0.2, 3.0), (1.5, 1.0, 0.4)])
def test_halfspace_scaling_identity(alpha, theta, R):
    """Value at distance R equals R^{theta-alpha} x value at distance 1."""
    at_r, rescaled = barrier_scaling_check(
        BarrierSpec(HalfSpaceBarrier(), theta), alpha, R)
    assert at_r == pytest.approx(rescaled, abs=1e-6 * max(1.0, abs(at_r)))


def test_constant_profile_maps_to_zero():
    v, err = nonlocal_apply_1d(lambda s: np.ones_like(np.asarray(s, float)),
                               0.3, 1.2)
    assert abs(v) < 1e-10
    assert err < 1e-8


def test_dyda_identity_via_generic_apply():
    """Delta^{alpha/2} (1-x^2)_+^{alpha/2} = -C_{1,alpha} on (-1,1)."""
    for alpha in (0.5, 1.2, 1.7):
        c = frac_laplacian_constant(alpha, 1)
        x = 0.3

        def g(y):
            return np.maximum(1.0 - np.asarray(y, float) ** 2, 0.0) ** (alpha / 2)

        v, _ = nonlocal_apply_1d(g, x, alpha, kinks=(1 - x, 1 + x))
        assert c * v == pytest.approx(-dyda_constant(alpha), rel=1e-6)


@pytest.mark.parametrize("alpha", [0.8, 1.5])
def test_halfspace_sign_pattern_2d(alpha):
    vals = [frac_laplacian_barrier(BarrierSpec(HalfSpaceBarrier(), theta),
                                   KernelSpec(), alpha, 1.0, CFG, dim=2)
            for theta in (alpha / 4, alpha / 2, 3 * alpha / 4)]
    assert vals[0] < 0 and abs(vals[1]) < 1e-6 and vals[2] > 0


def test_ball_exterior_flattens_to_halfspace():
    """At unit distance from a huge ball, the value matches the half-space."""
    alpha, theta = 1.2, 0.4
    hv = frac_laplacian_barrier(BarrierSpec(HalfSpaceBarrier(), theta),
                                KernelSpec(), alpha, 1.0, CFG)
    bv = frac_laplacian_barrier(BarrierSpec(BallExteriorBarrier(100.0), theta),
                                KernelSpec(), alpha, 101.0, CFG)
    assert bv == pytest.approx(hv, rel=0.05)


def test_interval_barrier_finite_and_negative_for_small_theta():
    for alpha in (0.5, 1.5):
        v = frac_laplacian_barrier(
            BarrierSpec(IntervalBarrier(0.0, 1.0), alpha / 4),
            KernelSpec(), alpha, 0.3, CFG)
        assert np.isfinite(v)
        assert v < 0  # small exponents are supersolutions near the boundary


def test_validation_errors():
    with pytest.raises(ValueError):
        frac_laplacian_barrier(BarrierSpec(HalfSpaceBarrier(), 0.6),
                               KernelSpec(), 0.5, 1.0, CFG)  # theta >= alpha
    with pytest.raises(ValueError):
        frac_laplacian_barrier(BarrierSpec(HalfSpaceBarrier(), 0.2),
                               KernelSpec(), 0.5, -1.0, CFG)  # outside support
    with pytest.raises(ValueError):
        frac_laplacian_barrier(BarrierSpec(BallExteriorBarrier(1.0), 0.2),
                               KernelSpec(), 0.5, 0.5, CFG)  # inside the ball
    with pytest.raises(ValueError):
        KernelSpec("radial", profile=lambda r: 5.0 * np.ones_like(r), kappa0=2.0)
    with pytest.raises(ValueError):
        QuadratureConfig(split_radius=2.0, outer_cutoff=1.0)


def test_error_bound_is_honest():
    """Reported bound dominates the defect against an independent oracle."""
    alpha, x = 1.2, 0.3
    c = frac_laplacian_constant(alpha, 1)

    def g(y):
        return np.maximum(1.0 - np.asarray(y, float) ** 2, 0.0) ** (alpha / 2)

    v, err = nonlocal_apply_1d(g, x, alpha, kinks=(1 - x, 1 + x))
    exact = -dyda_constant(alpha) / c
    assert abs(v - exact) <= 10.0 * err + 1e-12
