"""Shooting oracle: sweeps, node counting, eigenvalue search, functions."""

import math

import numpy as np
import pytest

from pdmradial.discretize import RadialGrid, build_grid, refine_and_extrapolate
from pdmradial.errors import (
    BracketError,
    IntegrationError,
    NotAnEigenvalueError,
)
from pdmradial.model import (
    ModelParams,
    Ordering,
    bdd_sturm_liouville_form,
    naive_closed_form_energy,
)
from pdmradial.shooting import (
    ShootSpec,
    eigenfunction,
    find_eigenvalue,
    numerov_sweep,
    shooting_form,
    solve_levels,
)


@pytest.fixture(scope="module")
def oscillator_spec():
    p = ModelParams(dim=3, ell=0, lam=0.0, omega=1.0)
    return ShootSpec(shooting_form(p, Ordering.NAIVE), build_grid(p, 3))


def test_shootspec_rejects_divergence_form():
    p = ModelParams(dim=3, ell=0, lam=0.1, omega=1.0)
    with pytest.raises(ValueError):
        ShootSpec(bdd_sturm_liouville_form(p), build_grid(p, 1))


def test_shootspec_requires_matching_origin_node():
    p_even = ModelParams(dim=1, ell=0, lam=0.1, omega=1.0)
    regular_grid = RadialGrid(10.0, 200, include_origin=False)
    with pytest.raises(ValueError, match="origin"):
        ShootSpec(shooting_form(p_even, Ordering.NAIVE), regular_grid)


def test_sweep_at_exact_eigenvalue(oscillator_spec):
    sweep = numerov_sweep(oscillator_spec, 1.5)
    assert sweep.node_count == 0
    assert abs(sweep.mismatch) < 1e-6
    assert sweep.tail_decaying


def test_sweep_far_below_ground_state(oscillator_spec):
    sweep = numerov_sweep(oscillator_spec, 0.1)
    assert sweep.node_count == 0
    assert abs(sweep.mismatch) > 0.1


def test_node_count_monotone_in_energy():
    p = ModelParams(dim=3, ell=0, lam=0.1, omega=1.0)
    spec = ShootSpec(shooting_form(p, Ordering.NAIVE), build_grid(p, 4))
    counts = [numerov_sweep(spec, e).node_count for e in np.linspace(0.2, 4.2, 40)]
    assert all(b >= a for a, b in zip(counts, counts[1:]))
    assert counts[0] == 0 and counts[-1] >= 3


def test_node_count_h_independent_at_eigenvalue():
    p = ModelParams(dim=3, ell=0, lam=0.1, omega=1.0)
    box = build_grid(p, 3).r_max
    energies = {}
    for m in (2000, 4000):
        spec = ShootSpec(shooting_form(p, Ordering.NAIVE), RadialGrid(box, m))
        e2 = find_eigenvalue(spec, 2, tol=1e-9)
        energies[m] = e2
        assert numerov_sweep(spec, e2).node_count == 2
    assert energies[2000] == pytest.approx(energies[4000], abs=1e-7)


def test_find_eigenvalue_with_explicit_bracket(oscillator_spec):
    e = find_eigenvalue(oscillator_spec, 0, bracket=(0.5, 2.5), tol=1e-9)
    assert e == pytest.approx(1.5, abs=1e-9)


def test_find_eigenvalue_default_bracket(oscillator_spec):
    for n, exact in ((0, 1.5), (1, 3.5), (2, 5.5)):
        assert find_eigenvalue(oscillator_spec, n, tol=1e-9) == pytest.approx(exact, abs=5e-9)


def test_find_eigenvalue_validates_bracket(oscillator_spec):
    with pytest.raises(BracketError, match="bracket"):
        find_eigenvalue(oscillator_spec, 0, bracket=(0.1, 0.9))  # no eigenvalue inside
    with pytest.raises(BracketError):
        find_eigenvalue(oscillator_spec, 0, bracket=(2.5, 0.5))
    with pytest.raises(ValueError):
        find_eigenvalue(oscillator_spec, 0, tol=-1.0)


def test_designated_oracle_run_validates_closed_form():
    # the closed-form naive spectrum is only trusted because this path
    # confirms it
    p = ModelParams(dim=3, ell=0, lam=0.1, omega=1.0)
    grid = build_grid(p, 2)
    spec = ShootSpec(shooting_form(p, Ordering.NAIVE), grid)
    e0 = find_eigenvalue(spec, 0, tol=1e-9)
    assert e0 == pytest.approx(1.291781, abs=1e-6)
    assert e0 == pytest.approx(naive_closed_form_energy(0, p), abs=5e-9)

    # the BenDaniel-Duke form lands somewhere measurably different
    spec_b = ShootSpec(shooting_form(p, Ordering.BENDANIEL_DUKE), grid)
    e0_b = find_eigenvalue(spec_b, 0, tol=1e-9)
    assert abs(e0_b - 1.291781) > 1e-3


def test_oracle_agrees_with_fd_path():
    # |E_shoot - E_FD,extrapolated| <= max(1e-7, 3 * FD error estimate)
    for ordering in (Ordering.NAIVE, Ordering.BENDANIEL_DUKE):
        p = ModelParams(dim=3, ell=1, lam=0.1, omega=1.0)
        grid = build_grid(p, 3)
        fd = refine_and_extrapolate(p, ordering, 3, grid=grid)
        spec = ShootSpec(shooting_form(p, ordering), grid)
        for lv in fd.levels:
            e = find_eigenvalue(spec, lv.n, tol=1e-9)
            assert abs(e - lv.energy) <= max(1e-7, 3.0 * lv.error_estimate)


def test_even_origin_levels():
    p = ModelParams(dim=1, ell=0, lam=0.0, omega=1.0)
    spec = ShootSpec(shooting_form(p, Ordering.NAIVE), build_grid(p, 3))
    for n, exact in ((0, 0.5), (1, 2.5), (2, 4.5)):
        assert find_eigenvalue(spec, n, tol=1e-9) == pytest.approx(exact, abs=1e-8)


def test_integration_error_on_nonfinite_coefficient(oscillator_spec):
    p = oscillator_spec.params
    spec = ShootSpec(shooting_form(p, Ordering.NAIVE), oscillator_spec.grid)
    spec.w_nodes = spec.w_nodes.copy()
    spec.w_nodes[100] = np.nan
    with pytest.raises(IntegrationError, match="integration failed"):
        numerov_sweep(spec, 1.0)


def test_solve_levels_spectrum():
    p = ModelParams(dim=3, ell=0, lam=0.1, omega=1.0)
    s = solve_levels(ShootSpec(shooting_form(p, Ordering.NAIVE), build_grid(p, 3)), 3)
    assert s.method == "shoot"
    expected = [naive_closed_form_energy(n, p) for n in range(3)]
    np.testing.assert_allclose(s.energies, expected, atol=5e-9)
    assert all(lv.trusted for lv in s.levels)


# ---------------------------------------------------------------------------
# eigenfunctions
# ---------------------------------------------------------------------------

def test_eigenfunction_ground_state(oscillator_spec):
    e0 = find_eigenvalue(oscillator_spec, 0, tol=1e-10)
    sol = eigenfunction(oscillator_spec, e0)
    assert sol.node_count == 0
    signs = np.sign(sol.v[np.abs(sol.v) > 1e-12 * np.max(np.abs(sol.v))])
    assert np.all(signs == signs[0])  # nodeless
    assert sol.norm_unit == pytest.approx(1.0, rel=1e-12)
    assert sol.norm_mass == pytest.approx(2.0, rel=1e-10)  # lam = 0: 2m = 2

    # analytic constant-mass profile r^(eta+1/2) exp(-omega r^2/2)
    r = sol.grid.nodes()
    analytic = r * np.exp(-0.5 * r * r)
    corr = float(np.sum(sol.v * analytic)
                 / math.sqrt(np.sum(sol.v**2) * np.sum(analytic**2)))
    assert corr >= 1.0 - 1e-6


def test_eigenfunction_norm_identities():
    p = ModelParams(dim=3, ell=1, lam=0.2, omega=1.0)
    grid = build_grid(p, 2)
    spec = ShootSpec(shooting_form(p, Ordering.BENDANIEL_DUKE), grid)
    e1 = find_eigenvalue(spec, 1, tol=1e-10)
    sol = eigenfunction(spec, e1)
    assert sol.node_count == 1
    # integral R^2 dr computed directly and through the transformation
    assert sol.radial_norm_direct() == pytest.approx(sol.radial_norm_via_mass(), rel=1e-8)
    # full-space factorization identity
    assert sol.full_space_norm() == pytest.approx(sol.radial_norm_direct(), rel=1e-10)


def test_eigenfunction_rejects_non_eigenvalue(oscillator_spec):
    with pytest.raises(NotAnEigenvalueError, match="not an eigenvalue"):
        eigenfunction(oscillator_spec, 1.3)


def test_eigenvector_cross_method_agreement():
    # FD and shooting must agree on the eigenfunction, not just the
    # eigenvalue; the fine FD grid contains the shooting nodes at every
    # second point
    p = ModelParams(dim=3, ell=0, lam=0.1, omega=1.0)
    grid = build_grid(p, 1, num_points=1000)
    fd = refine_and_extrapolate(p, Ordering.BENDANIEL_DUKE, 1, grid=grid)
    fd_on_coarse = fd.vectors[1::2, 0]
    spec = ShootSpec(shooting_form(p, Ordering.BENDANIEL_DUKE), grid)
    sol = eigenfunction(spec, find_eigenvalue(spec, 0, tol=1e-10))
    corr = float(np.sum(fd_on_coarse * sol.radial)
                 / math.sqrt(np.sum(fd_on_coarse**2) * np.sum(sol.radial**2)))
    assert corr >= 1.0 - 1e-8


def test_numerov_self_convergence_order():
    # halving h changes converged eigenvalues ~ 2^-4
    p = ModelParams(dim=3, ell=0, lam=0.1, omega=1.0)
    box = build_grid(p, 1).r_max
    energies = []
    h_values = []
    for m in (500, 1000, 2000):
        grid = RadialGrid(box, m)
        spec = ShootSpec(shooting_form(p, Ordering.NAIVE), grid)
        energies.append(find_eigenvalue(spec, 0, tol=1e-13))
        h_values.append(grid.h)
    d1 = abs(energies[0] - energies[1])
    d2 = abs(energies[1] - energies[2])
    order = math.log(d1 / d2) / math.log(h_values[0] / h_values[1])
    assert order == pytest.approx(4.0, abs=0.5)
