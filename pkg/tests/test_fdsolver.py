import numpy as np
import pytest

from stableexit.domains import DriftSpec, Interval
from stableexit.fdsolver import (Grid1D, assemble_frac_laplacian,
                                 max_stable_dt, solve, solve_steady,
                                 step_imex)
from stableexit.problem import (ProblemSpec, SourceFunction, SpaceFunction,
                                TimeFactor)
from stableexit.quadrature import dyda_constant
from stableexit.stable import StableLaw


def test_grid_layout():
    g = Grid1D(0.0, 1.0, 9)
    assert g.h == pytest.approx(0.1)
    assert g.nodes[0] == pytest.approx(0.1)
    assert g.nodes[-1] == pytest.approx(0.9)
    assert Grid1D.for_interval(Interval(-1.0, 1.0), 5) == Grid1D(-1.0, 1.0, 5)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 1.9])
def test_weight_matrix_structure(alpha):
    g = Grid1D(-1.0, 1.0, 200)
    w = assemble_frac_laplacian(g, alpha)
    a = w.matrix()
    assert np.allclose(a, a.T)          # symmetric Toeplitz
    assert np.all(w.w > 0)              # off-diagonal weights positive
    assert w.row_sum > np.sum(w.w)      # exterior tail mass strictly positive
    # applying to the constant 1: value is minus the mass escaping the stencil
    center = (a @ np.ones(g.N))[g.N // 2]
    assert center < 0


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_converges_to_dyda_identity(alpha):
    """Applying the discrete operator to (1-x^2)^{alpha/2} approaches the
    constant -C_{1,alpha} on interior nodes as the grid refines."""
    errs = []
    for N in (250, 1000):
        g = Grid1D(-1.0, 1.0, N)
        lu = assemble_frac_laplacian(g, alpha).matrix() @ (
            (1 - g.nodes ** 2) ** (alpha / 2))
        c = dyda_constant(alpha)
        mid = slice(N // 4, 3 * N // 4)
        errs.append(np.max(np.abs(lu[mid] + c)) / c)
    assert errs[-1] < 0.01
    assert errs[-1] < errs[0]


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_steady_state_matches_dyda_profile(alpha):
    g = Grid1D(-1.0, 1.0, 2000)
    u = solve_steady(g, alpha, dyda_constant(alpha))
    exact = (1 - g.nodes ** 2) ** (alpha / 2)
    assert np.max(np.abs(u - exact)) / np.max(exact) <= 0.02


def test_zero_state_is_fixed_point():
    g = Grid1D(0.0, 1.0, 50)
    w = assemble_frac_laplacian(g, 0.5)
    out = step_imex(np.zeros(g.N), 1e-3, DriftSpec.zero(), None, w, g)
    assert np.allclose(out, 0.0)


def test_cfl_enforced():
    g = Grid1D(0.0, 1.0, 50)
    w = assemble_frac_laplacian(g, 0.5)
    with pytest.raises(ValueError):
        step_imex(np.zeros(g.N), 10.0, DriftSpec.preset("constant-one"), None, w, g)
    assert max_stable_dt(g, DriftSpec.preset("constant-one")) == pytest.approx(g.h, rel=1e-6)


def test_solve_contract_and_dissipativity():
    prob = ProblemSpec.example13(0.5)
    g = Grid1D(0.0, 1.0, 400)
    sol = solve(prob, g, 0.9 * max_stable_dt(g, prob.drift), 0.5)
    assert np.allclose(sol.values[0], prob.phi_at(g.nodes))
    assert np.max(np.abs(sol.values)) <= 1.0 + 1e-10   # maximum principle
    norms = np.max(np.abs(sol.values), axis=1)
    assert np.all(np.diff(norms) <= 1e-12)             # sup norm nonincreasing


def test_refinement_consistency():
    prob = ProblemSpec.example13(0.5)
    probes = np.array([0.25, 0.5, 0.75])
    vals = []
    for N in (100, 200, 400):
        g = Grid1D(0.0, 1.0, N)
        s = solve(prob, g, 0.9 * max_stable_dt(g, prob.drift), 0.5)
        vals.append(s.at(0.5, probes))
    assert np.max(np.abs(vals[2] - vals[1])) <= np.max(np.abs(vals[1] - vals[0]))


def test_positivity_preserved():
    prob = ProblemSpec(domain=Interval(0.0, 1.0),
                       drift=DriftSpec.preset("example13"),
                       law=StableLaw(0.5, 1),
                       phi=SpaceFunction.constant(0.5),
                       f=SourceFunction(SpaceFunction.constant(1.0), TimeFactor()))
    g = Grid1D(0.0, 1.0, 200)
    s = solve(prob, g, 0.9 * max_stable_dt(g, prob.drift), 0.3)
    assert np.all(s.values >= -1e-12)


def test_solution_is_zero_outside_interval():
    prob = ProblemSpec.example13(0.5)
    g = Grid1D(0.0, 1.0, 100)
    sol = solve(prob, g, 0.9 * max_stable_dt(g, prob.drift), 0.1)
    assert sol.at(0.05, np.array([-0.5, 0.0, 1.0, 1.5])).tolist() == [0.0] * 4


def test_domain_mismatch_rejected():
    prob = ProblemSpec.example13(0.5)
    with pytest.raises(ValueError):
        solve(prob, Grid1D(-1.0, 1.0, 50), 1e-3, 0.1)
