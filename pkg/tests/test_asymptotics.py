"""Tests for the small-radius asymptotics of the reduced functional."""

import numpy as np
import pytest

from willmore_lab.core.asymptotics import (
    CRITICAL_COEFFICIENT,
    ENERGY_CONSTANT,
    PROFILE_COEFFICIENT,
    bivariate_bound_check,
    gluing_consistency,
    graph_energy_constant,
    loglog_slope,
    profile_field,
    profile_residual_series,
    remainder_bound_fit,
    rho_derivative_probe,
    small_radius_energy_fit,
    w_profile_residual,
)
from willmore_lab.core.errors import ConfigError
from willmore_lab.core.metrics import MetricFamily, S3Point
from willmore_lab.core.reduction import SolverConfig

SOLVER = SolverConfig(lmax=8)
BERGER = MetricFamily.berger(1.05)
RHOS = [0.06, 0.09, 0.12, 0.15, 0.18]
# |Ric0|^2 = 32 (lam - 1)^2 / 3
RIC0_NORM2 = 32.0 * 0.05**2 / 3.0


def test_loglog_slope_recovers_power_law():
    x = np.array([0.1, 0.2, 0.4, 0.8])
    k, c = loglog_slope(x, 3.0 * x**4)
    assert k == pytest.approx(4.0)
    assert c == pytest.approx(3.0)


def test_graph_energy_constants():
    assert graph_energy_constant(PROFILE_COEFFICIENT) == pytest.approx(ENERGY_CONSTANT)
    assert graph_energy_constant(0.0) == pytest.approx(4.0 * np.pi / 45.0)
    assert graph_energy_constant(CRITICAL_COEFFICIENT) == 0.0


def test_bound_check_on_exact_law():
    samples = [{"eps": e, "rho": r, "omega": 2.0 * e**2 * r**5} for e in (0.02, 0.04) for r in (0.1, 0.15, 0.2)]
    check = bivariate_bound_check(samples)
    assert check["constant"] == pytest.approx(2.0)
    assert check["coarse_constant"] == pytest.approx(2.0)
    assert check["stable"]


def test_bound_check_without_perturbation():
    assert bivariate_bound_check([{"eps": 0.0, "rho": 0.1, "omega": 0.0}])["constant"] == 0.0


def test_small_radius_samples_validated(identity):
    with pytest.raises(ConfigError):
        small_radius_energy_fit(BERGER, identity, [0.1, 0.2, 0.3, 0.4], SOLVER)
    with pytest.raises(ConfigError):
        small_radius_energy_fit(BERGER, identity, [0.1, 0.2], SOLVER)
    with pytest.raises(ConfigError):
        small_radius_energy_fit(BERGER, identity, RHOS, SOLVER, branch="flat")


def test_geodesic_spheres_follow_quartic_law(identity):
    fit = small_radius_energy_fit(BERGER, identity, RHOS, SOLVER, branch="geodesic")
    assert fit.target_coefficient == pytest.approx(4.0 * np.pi / 45.0 * RIC0_NORM2, rel=1e-10)
    assert fit.fitted_exponent == pytest.approx(4.0, abs=0.15)
    assert fit.relative_error < 0.1
    assert len(fit.samples) == len(RHOS)
    assert fit.to_dict()["quantity"] == "energy_geodesic"


def test_profile_spheres_follow_quartic_law(identity):
    fit = small_radius_energy_fit(BERGER, identity, RHOS, SOLVER, branch="profile")
    assert fit.target_coefficient == pytest.approx(ENERGY_CONSTANT * RIC0_NORM2, rel=1e-10)
    assert fit.fitted_exponent == pytest.approx(4.0, abs=0.15)
    assert fit.relative_error < 0.1
    assert not fit.degenerate


def test_reduced_energy_has_no_quartic_term(identity):
    reduced = small_radius_energy_fit(BERGER, identity, RHOS, SOLVER)
    geodesic = small_radius_energy_fit(BERGER, identity, RHOS, SOLVER, branch="geodesic")
    assert reduced.target_coefficient == 0.0
    assert reduced.fitted_exponent > 5.0
    assert reduced.relative_error < 0.05
    for low, high in zip(reduced.samples, geodesic.samples):
        assert -SOLVER.tol <= low["energy"] < high["energy"]


@pytest.mark.parametrize("branch", ["geodesic", "profile"])
def test_quartic_coefficient_scales_with_eps_squared(identity, branch):
    full = small_radius_energy_fit(BERGER, identity, RHOS, SOLVER, branch=branch)
    half = small_radius_energy_fit(MetricFamily.berger(1.025), identity, RHOS, SOLVER, branch=branch)
    assert half.fitted_coefficient / full.fitted_coefficient == pytest.approx(0.25, rel=0.05)


def test_reduced_energy_scales_with_eps_squared(identity):
    rhos = [0.12, 0.15, 0.18, 0.2]
    full = small_radius_energy_fit(BERGER, identity, rhos, SOLVER)
    half = small_radius_energy_fit(MetricFamily.berger(1.025), identity, rhos, SOLVER)
    for a, b in zip(full.samples, half.samples):
        assert b["energy"] / a["energy"] == pytest.approx(0.25, rel=0.15)


def test_quartic_coefficient_independent_of_centre(rng):
    points = [S3Point.random(rng) for _ in range(3)]
    coefficients = [small_radius_energy_fit(BERGER, p, RHOS, SOLVER, branch="geodesic").fitted_coefficient
                    for p in points]
    assert max(coefficients) - min(coefficients) < 0.02 * np.mean(coefficients)


def test_reduced_w_matches_critical_profile(identity):
    rho = 0.1
    leading = profile_field(BERGER, identity, rho, SOLVER.lmax, CRITICAL_COEFFICIENT).norm() / rho**3
    assert w_profile_residual(BERGER, identity, rho, SOLVER, CRITICAL_COEFFICIENT) < 0.2 * leading


def test_reduced_w_misses_twelfth_profile(identity):
    # w ~ -(1/6) rho^3 Ric0 sits three profile lengths from (1/12) rho^3 Ric0
    rho = 0.1
    leading = profile_field(BERGER, identity, rho, SOLVER.lmax).norm() / rho**3
    assert w_profile_residual(BERGER, identity, rho, SOLVER) == pytest.approx(3.0 * leading, rel=0.1)


def test_round_profile_vanishes(generic_point):
    fit = profile_residual_series(MetricFamily.round(), generic_point, [0.05, 0.1, 0.2], SOLVER)
    assert max(s["residual"] for s in fit.samples) < 1e-12


def test_gluing_consistency(identity):
    assert gluing_consistency(BERGER, identity, 0.1, SOLVER) < 10.0 * SOLVER.tol


@pytest.mark.slow
def test_profile_residual_decays(identity):
    fit = profile_residual_series(BERGER, identity, [0.05, 0.1, 0.2], SOLVER)
    assert fit.metadata["profile_coefficient"] == CRITICAL_COEFFICIENT
    assert fit.fitted_exponent >= 0.8


@pytest.mark.slow
def test_remainder_bound(identity):
    fit = remainder_bound_fit(BERGER, identity, [0.025, 0.05], [0.08, 0.12, 0.16, 0.2], SOLVER)
    bound = fit.metadata["bound"]
    assert bound["constant"] == fit.bound_constant
    assert bound["constant"] <= 3.0 * bound["coarse_constant"]
    assert {s["eps"] for s in fit.samples} == {0.025, 0.05}
    assert set(fit.metadata["slopes"]) == {repr(0.025), repr(0.05)}
    assert all(slope >= 4.5 for slope in fit.metadata["slopes"].values())


@pytest.mark.slow
def test_rho_derivative_grows_like_rho_squared(identity):
    fit = rho_derivative_probe(BERGER, identity, [0.05, 0.1, 0.2], SOLVER)
    assert fit.fitted_exponent == pytest.approx(2.0, abs=0.3)
