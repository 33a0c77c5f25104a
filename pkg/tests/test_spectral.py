"""Tests for the spherical-harmonic layer."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from willmore_lab.core.errors import ConfigError, KernelComponentPresent
from willmore_lab.core.spectral import (
    SphereField,
    apply_I0pp,
    i0pp_symbol,
    invert_I0pp,
    kernel_basis,
    kernel_components,
    laplace_beltrami,
    lm_index,
    n_coeffs,
    project_Kperp,
    sphere_grid,
)

LMAX = 8


def test_grid_weights_sum_to_sphere_area():
    grid = sphere_grid(LMAX)
    assert grid.n_nodes == (LMAX + 1) * (2 * LMAX + 2)
    assert np.sum(grid.weights) == pytest.approx(4.0 * np.pi, abs=1e-12)


def test_grid_rejects_small_band_limit():
    with pytest.raises(ConfigError):
        sphere_grid(4)


def test_coefficient_ordering():
    assert lm_index(0, 0) == 0
    assert [lm_index(1, m) for m in (-1, 0, 1)] == [1, 2, 3]
    assert lm_index(2, -2) == 4
    assert n_coeffs(LMAX) == 81
    with pytest.raises(ConfigError):
        lm_index(1, 2)


def test_degree_one_harmonics_are_coordinates():
    c = np.sqrt(4.0 * np.pi / 3.0)
    for axis, (l, m) in enumerate(((1, 1), (1, -1), (1, 0))):
        f = SphereField.from_function(lambda d: d[:, axis], LMAX)
        expected = np.zeros(n_coeffs(LMAX))
        expected[lm_index(l, m)] = c
        assert_allclose(f.coeffs, expected, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_parseval_and_analysis(seed):
    f = SphereField.random(LMAX, np.random.default_rng(seed))
    assert f.grid.integrate(f.values**2) == pytest.approx(np.sum(f.coeffs**2), rel=1e-10)
    assert_allclose(SphereField.from_values(f.values, LMAX).coeffs, f.coeffs, atol=1e-10)


def test_laplacian_eigenvalues():
    for l in range(LMAX + 1):
        y = SphereField.harmonic(LMAX, l, -l)
        assert_allclose(laplace_beltrami(y).coeffs, -l * (l + 1) * y.coeffs)


def test_laplacian_agrees_with_nodal_derivatives(rng):
    f = SphereField.random(LMAX, rng)
    f_t, _, f_tt, _, f_pp = f.derivatives()
    s = f.grid.sin_theta
    nodal = f_tt + np.cos(f.grid.node_theta) / s * f_t + f_pp / s**2
    assert_allclose(nodal, laplace_beltrami(f).values, atol=1e-9 * np.max(np.abs(nodal)))


def test_kernel_is_annihilated_and_orthonormal():
    basis = kernel_basis(LMAX)
    for q in basis:
        assert apply_I0pp(q, 0.7).norm() == 0.0
    gram = np.array([[a.grid.integrate(a.values * b.values) for b in basis] for a in basis])
    assert_allclose(gram, np.eye(4), atol=1e-12)


def test_symbol_values():
    symbol = i0pp_symbol(LMAX, np.pi / 2)
    assert symbol[lm_index(2, 0)] == pytest.approx(12.0)
    assert symbol[lm_index(3, 1)] == pytest.approx(12 * 10 / 2)
    rho = 0.4
    assert i0pp_symbol(LMAX, rho)[lm_index(2, 0)] == pytest.approx(12.0 / np.sin(rho) ** 4)


@pytest.mark.parametrize("rho", [0.2, 0.9, np.pi / 2, 2.5])
def test_inverse_on_kernel_complement(rng, rho):
    f = project_Kperp(SphereField.random(LMAX, rng))
    back = invert_I0pp(apply_I0pp(f, rho), rho)
    assert_allclose(back.coeffs, f.coeffs, rtol=1e-12, atol=1e-14)


def test_inverse_refuses_kernel_content(rng):
    f = SphereField.random(LMAX, rng)
    with pytest.raises(KernelComponentPresent):
        invert_I0pp(f, 1.0)


def test_projector_is_orthogonal(rng):
    f = SphereField.random(LMAX, rng)
    p = project_Kperp(f)
    assert_allclose(kernel_components(p), 0.0)
    assert (f - p).inner(p) == pytest.approx(0.0, abs=1e-14)
    assert_allclose(project_Kperp(p).coeffs, p.coeffs)


@pytest.mark.parametrize("rho", [0.0, np.pi, -0.1])
def test_symbol_rejects_degenerate_radius(rho):
    with pytest.raises(ConfigError):
        i0pp_symbol(LMAX, rho)


def test_field_arithmetic_checks_band_limits():
    with pytest.raises(ConfigError):
        SphereField.zeros(8) + SphereField.zeros(9)
    with pytest.raises(ConfigError):
        SphereField(8, np.zeros(3))
    f = SphereField.harmonic(LMAX, 2, 1, 3.0)
    assert (2.0 * f - f / 0.5).norm() == 0.0
    assert (-f).coeffs[lm_index(2, 1)] == -3.0
