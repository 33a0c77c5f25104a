"""Tests for the auxiliary-equation solver and the reduced functional."""

from dataclasses import replace

import numpy as np
import pytest

from willmore_lab.core.asymptotics import loglog_slope
from willmore_lab.core.errors import ConfigError, NoConvergence, NonPositiveDefinite
from willmore_lab.core.metrics import MetricFamily
from willmore_lab.core.reduction import (
    OptimizerConfig,
    SolverConfig,
    find_critical,
    kernel_coefficients,
    multistart_spread,
    reduced_functional,
    solve_auxiliary,
)
from willmore_lab.core.spectral import kernel_components
from willmore_lab.core.willmore import willmore_gradient

SOLVER = SolverConfig(lmax=8)
BERGER = MetricFamily.berger(1.05)


def test_round_solution_is_zero(generic_point):
    point = solve_auxiliary(MetricFamily.round(), generic_point, 0.9, SOLVER)
    assert point.converged
    assert point.iterations == 0
    assert point.w.norm() == 0.0
    assert abs(point.phi) < 1e-12


def test_converged_solution(identity):
    point = solve_auxiliary(BERGER, identity, 0.8, SOLVER)
    assert point.converged
    assert point.aux_residual < SOLVER.tol
    assert np.all(kernel_components(point.w) == 0.0)
    assert point.residual_history[-1] == pytest.approx(point.aux_residual)
    assert point.phi > 0.0
    doc = point.to_dict()
    assert doc["lmax"] == 8
    assert len(doc["w"]) == 81


def test_solution_is_linear_in_epsilon(identity):
    eps = (0.02, 0.04, 0.08)
    norms = [solve_auxiliary(MetricFamily.berger(1.0 + e), identity, 0.8, SOLVER).w.norm() for e in eps]
    slope, _ = loglog_slope(eps, norms)
    assert slope == pytest.approx(1.0, abs=0.1)


def test_left_invariance_of_reduced_functional(identity, generic_point):
    a = reduced_functional(BERGER, identity, 0.8, SOLVER)
    b = reduced_functional(BERGER, generic_point, 0.8, SOLVER)
    assert a == pytest.approx(b, abs=1e-10)


def test_multistart_agreement(identity):
    assert multistart_spread(BERGER, identity, 0.8, SOLVER) < 10.0 * SOLVER.tol


def test_window_enforced(identity):
    with pytest.raises(ConfigError):
        solve_auxiliary(BERGER, identity, 0.05, SOLVER)


def test_invalid_family_rejected(identity):
    with pytest.raises(NonPositiveDefinite):
        solve_auxiliary(MetricFamily.berger(0.05), identity, 0.8, SOLVER)


def test_no_convergence_carries_best_iterate(identity):
    config = replace(SOLVER, max_iter=1, tol=1e-15)
    with pytest.raises(NoConvergence) as info:
        solve_auxiliary(BERGER, identity, 0.8, config)
    best = info.value.best
    assert best is not None
    assert not best.converged
    assert best.aux_residual == pytest.approx(min(best.residual_history))


def test_kernel_coefficients(identity):
    point = solve_auxiliary(BERGER, identity, 0.8, SOLVER)
    assert kernel_coefficients(point).shape == (4,)


def test_round_landscape_is_flat():
    search = find_critical(MetricFamily.round(), SOLVER, OptimizerConfig(n_rho=4))
    assert search.flat
    assert search.critical
    assert search.trail
    assert search.to_dict()["flat"] is True


def test_residual_decreases_after_second_iteration(identity):
    history = solve_auxiliary(BERGER, identity, 0.8, SOLVER).residual_history
    assert len(history) > 3
    for before, after in zip(history[2:], history[3:]):
        assert after <= before or after < SOLVER.tol


def test_non_critical_radius_has_kernel_component(identity):
    point = solve_auxiliary(BERGER, identity, 0.8, SOLVER)
    assert point.converged
    assert np.max(np.abs(point.kernel_coeffs)) > 10.0 * SOLVER.tol
    assert abs(point.kernel_coeffs[0]) > 1e-3


@pytest.mark.slow
def test_berger_critical_point(identity, generic_point):
    optimizer = OptimizerConfig(n_rho=6, max_evals=60)
    searches = [find_critical(BERGER, SOLVER, optimizer, start=p) for p in (identity, generic_point)]
    for search in searches:
        best = search.incumbent
        assert search.critical
        assert not search.boundary
        assert np.all(np.abs(best.kernel_coeffs) < 10.0 * SOLVER.tol)
        assert best.aux_residual < 10.0 * SOLVER.tol
        grad = willmore_gradient(BERGER, best.p, best.rho, best.w, ode=SOLVER.ode)
        assert grad.norm() < 1e-5
        assert best.phi > 0.0
        assert best.rho == pytest.approx(1.5838, abs=0.01)
        assert search.trail[0]["stage"] == "grid"
    assert searches[0].incumbent.p == identity
    assert searches[1].incumbent.p == generic_point
    assert searches[0].incumbent.phi == pytest.approx(searches[1].incumbent.phi, abs=1e-7)
