import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stableexit.rng import RngStream, make_generator
from stableexit.stable import (StableLaw, pos_stable_from_uniforms,
                               sample_isotropic_increment, sample_pos_stable,
                               sample_sym_stable_1d, sym_stable_from_uniforms)


def test_law_validation():
    with pytest.raises(ValueError):
        StableLaw(2.0, 1)
    with pytest.raises(ValueError):
        StableLaw(0.0, 1)
    with pytest.raises(ValueError):
        StableLaw(1.0, 0)


def test_streams_are_deterministic_and_disjoint():
    a = sample_sym_stable_1d(1.3, 1.0, RngStream(5, 7), size=100)
    b = sample_sym_stable_1d(1.3, 1.0, RngStream(5, 7), size=100)
    c = sample_sym_stable_1d(1.3, 1.0, RngStream(5, 8), size=100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_generator_keying_matches_stream():
    g1 = make_generator(3, 11)
    g2 = RngStream(3, 11).generator
    assert np.array_equal(g1.random(8), g2.random(8))


def test_alpha_one_is_cauchy():
    """At alpha = 1 the sampler reduces to tan(U), a standard Cauchy."""
    gen = make_generator(0, 0)
    u = gen.random(200_000)
    e = -np.log1p(-gen.random(200_000))
    x = sym_stable_from_uniforms(1.0, u, e)
    # Cauchy CDF oracle: P(X <= t) = 1/2 + arctan(t)/pi
    for t in (-2.0, -0.5, 0.0, 1.0, 3.0):
        emp = np.mean(x <= t)
        exact = 0.5 + math.atan(t) / math.pi
        assert abs(emp - exact) < 0.005


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.2, 1.7])
def test_characteristic_function(alpha):
    """E cos(xi X) = exp(-|xi|^alpha) pins the normalization exactly."""
    x = sample_sym_stable_1d(alpha, 1.0, RngStream(42, 0), size=400_000)
    for xi in (0.5, 1.0, 2.0):
        emp = np.mean(np.cos(xi * x))
        exact = math.exp(-(xi ** alpha))
        assert abs(emp - exact) < 0.005, (alpha, xi, emp, exact)


@pytest.mark.parametrize("a", [0.25, 0.5, 0.9])
def test_positive_stable_laplace_transform(a):
    """E exp(-lam S) = exp(-lam^a) for the one-sided stable subordinator."""
    s = sample_pos_stable(a, 1.0, RngStream(7, 0), size=400_000)
    assert np.all(s > 0)
    for lam in (0.5, 1.0, 2.0):
        emp = np.mean(np.exp(-lam * s))
        exact = math.exp(-(lam ** a))
        assert abs(emp - exact) < 0.005, (a, lam, emp, exact)


def test_scale_acts_as_elapsed_time():
    """scale = t multiplies a unit draw by t^{1/alpha} exactly."""
    base = sample_sym_stable_1d(0.8, 1.0, RngStream(1, 2), size=50)
    scaled = sample_sym_stable_1d(0.8, 3.0, RngStream(1, 2), size=50)
    assert np.allclose(scaled, 3.0 ** (1.0 / 0.8) * base, rtol=1e-14)


def test_increment_time_scaling():
    """X_dt equals dt^{1/alpha} X_1 in law; with shared streams, exactly."""
    law = StableLaw(1.5, 1)
    x1 = sample_isotropic_increment(law, 1.0, RngStream(9, 3), size=64)
    xdt = sample_isotropic_increment(law, 0.25, RngStream(9, 3), size=64)
    assert np.allclose(xdt, 0.25 ** (1.0 / 1.5) * x1, rtol=1e-12)


@pytest.mark.parametrize("alpha", [0.7, 1.4])
def test_isotropic_2d_characteristic_function(alpha):
    """Subordinated 2d increments have E e^{i xi.X} = exp(-t |xi|^alpha)."""
    law = StableLaw(alpha, 2)
    x = sample_isotropic_increment(law, 1.0, RngStream(11, 0), size=300_000)
    assert x.shape == (300_000, 2)
    for xi in (np.array([1.0, 0.0]), np.array([0.6, 0.8])):
        emp = np.mean(np.cos(x @ xi))
        exact = math.exp(-(float(np.linalg.norm(xi)) ** alpha))
        assert abs(emp - exact) < 0.005


def test_symmetry():
    x = sample_sym_stable_1d(1.1, 1.0, RngStream(2, 0), size=200_000)
    assert abs(np.mean(np.sign(x))) < 0.01


@given(alpha=st.floats(0.1, 1.9), u=st.floats(1e-9, 1.0 - 1e-9),
       e=st.floats(1e-6, 20.0))
@settings(max_examples=200, deadline=None)
def test_sym_sampler_finite(alpha, u, e):
    v = sym_stable_from_uniforms(alpha, np.array([u]), np.array([e]))
    assert np.isfinite(v).all()


@given(a=st.floats(0.05, 0.95), u=st.floats(1e-9, 1.0 - 1e-9),
       e=st.floats(1e-6, 20.0))
@settings(max_examples=200, deadline=None)
def test_pos_sampler_positive(a, u, e):
    v = pos_stable_from_uniforms(a, np.array([u]), np.array([e]))
    assert np.isfinite(v).all() and (v > 0).all()
