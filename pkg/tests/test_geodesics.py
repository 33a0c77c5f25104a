"""Tests for geodesics, the exponential map and geodesic-sphere graphs."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from willmore_lab.core.errors import ConfigError, GraphTooLarge
from willmore_lab.core.geodesics import (
    exp_map,
    exp_map_inverse,
    geodesic_path,
    graph_sphere,
    pullback_field,
    radial_fan,
    surface_laplacian,
)
from willmore_lab.core.metrics import MetricFamily, S3Point, eval_metric, quat_mul
from willmore_lab.core.spectral import SphereField, laplace_beltrami

LMAX = 8


def test_round_exp_is_great_circle(identity):
    v = np.array([0.3, -0.4, 1.2])
    r = np.linalg.norm(v)
    end = exp_map(MetricFamily.round(), identity, v)
    assert_allclose(end.array, np.r_[np.cos(r), np.sin(r) * v / r], atol=1e-10)


def test_exp_commutes_with_left_translation(generic_point, identity):
    fam = MetricFamily.berger(1.2)
    v = np.array([0.5, 0.1, -0.7])
    at_identity = exp_map(fam, identity, v)
    at_point = exp_map(fam, generic_point, v)
    assert_allclose(at_point.array, quat_mul(generic_point.array, at_identity.array), atol=1e-10)


def test_zero_vector_and_length_limit(identity):
    assert exp_map(MetricFamily.round(), identity, np.zeros(3)) == identity
    with pytest.raises(ConfigError):
        exp_map(MetricFamily.round(), identity, np.array([4.0, 0.0, 0.0]))


def test_geodesic_has_constant_speed(generic_point, hopf_family):
    v = np.array([0.6, -0.2, 0.9])
    path = geodesic_path(hopf_family, generic_point, v)
    G = eval_metric(hopf_family, generic_point)
    speed0 = np.sqrt(v @ G @ v)
    assert_allclose(path.speeds, speed0, rtol=1e-8)
    assert path.length() == pytest.approx(speed0, rel=1e-8)
    assert_allclose(path.points[-1], exp_map(hopf_family, generic_point, v).array, atol=1e-10)


@pytest.mark.parametrize("family", [MetricFamily.round(), MetricFamily.berger(1.2)])
def test_exp_inverse(family, generic_point, rng):
    for _ in range(3):
        v = rng.standard_normal(3)
        v *= rng.uniform(0.2, 1.4) / np.linalg.norm(v)
        back = exp_map_inverse(family, generic_point, exp_map(family, generic_point, v))
        assert_allclose(back, v, atol=1e-8)


@pytest.mark.parametrize("rho", [0.3, 0.7, np.pi / 2, 2.2])
def test_round_geodesic_spheres(identity, rho):
    s = graph_sphere(MetricFamily.round(), identity, rho, SphereField.zeros(LMAX))
    H = np.sin(2.0 * rho) / np.sin(rho) ** 2
    assert_allclose(s.H, H, atol=1e-7 * max(1.0, abs(H)))
    assert s.area() == pytest.approx(4.0 * np.pi * np.sin(rho) ** 2, abs=1e-8)
    assert np.sqrt(2.0 * np.max(s.half_A0_norm2())) < 1e-7
    assert_allclose(s.ricci_normal(), 2.0, atol=1e-8)


def test_antipodal_radius_symmetry(identity):
    a = graph_sphere(MetricFamily.round(), identity, 0.4, SphereField.zeros(LMAX))
    b = graph_sphere(MetricFamily.round(), identity, np.pi - 0.4, SphereField.zeros(LMAX))
    assert a.area() == pytest.approx(b.area(), abs=1e-8)
    assert_allclose(np.abs(a.H), np.abs(b.H), atol=1e-8)


def test_surface_laplacian_on_round_sphere(identity):
    rho = 0.7
    s = graph_sphere(MetricFamily.round(), identity, rho, SphereField.zeros(LMAX))
    y = SphereField.harmonic(LMAX, 2, 1)
    expected = laplace_beltrami(y).values / np.sin(rho) ** 2
    assert_allclose(surface_laplacian(s, y), expected, atol=1e-6 * np.max(np.abs(expected)))


def test_perturbed_graph_invariants(hopf_family, generic_point, rng):
    w = SphereField.random(LMAX, rng, scale=1e-3, l_cut=4)
    s = graph_sphere(hopf_family, generic_point, 0.8, w)
    assert max(s.invariant_residuals().values()) < 1e-8
    rows = s.to_rows()
    assert len(rows) == s.grid.n_nodes
    assert {"theta", "phi", "H", "A0_norm2", "area_el"} <= set(rows[0])


def test_graph_too_large(identity):
    w = SphereField.harmonic(LMAX, 0, 0, 2.0)
    with pytest.raises(GraphTooLarge):
        graph_sphere(MetricFamily.round(), identity, 0.3, w)


def test_radial_graph_shifts_radius(identity):
    # w = c everywhere moves the round sphere to radius rho + c
    c = 0.05
    w = SphereField.harmonic(LMAX, 0, 0, c * np.sqrt(4.0 * np.pi))
    s = graph_sphere(MetricFamily.round(), identity, 0.6, w)
    assert s.area() == pytest.approx(4.0 * np.pi * np.sin(0.65) ** 2, abs=1e-8)


def test_points_lie_on_sphere(hopf_family):
    p = S3Point((0.2, 0.1, -0.6, 0.7))
    s = graph_sphere(hopf_family, p, 1.0, SphereField.zeros(LMAX))
    assert_allclose(np.linalg.norm(s.position, axis=1), 1.0, atol=1e-9)


def test_radial_fan_matches_graph_positions(hopf_family, generic_point):
    rho = 0.8
    fan = radial_fan(hopf_family, generic_point, rho, LMAX)
    s = graph_sphere(hopf_family, generic_point, rho, SphereField.zeros(LMAX))
    states = fan.evaluate(np.full(s.grid.n_nodes, rho))
    assert_allclose(states[:, :4], s.position, atol=1e-10)
    with pytest.raises(GraphTooLarge):
        fan.evaluate(np.full(s.grid.n_nodes, rho + 0.6 * fan.half_width * 2))
    with pytest.raises(ConfigError):
        radial_fan(hopf_family, generic_point, 0.0, LMAX)


def test_group_fan_is_shared(generic_point):
    berger = MetricFamily.berger(1.05)
    assert radial_fan(berger, generic_point, 0.8, LMAX) is radial_fan(berger, S3Point.identity(), 0.8, LMAX)


def test_pullback_field(identity):
    s = graph_sphere(MetricFamily.round(), identity, 0.7, SphereField.zeros(LMAX))
    from_fn = pullback_field(lambda x: x[:, 0], s)
    from_values = pullback_field(s.position[:, 0], s)
    assert_allclose(from_fn.coeffs, from_values.coeffs)
    # x0 is constant on a geodesic sphere about the identity
    assert_allclose(from_fn.values, np.cos(0.7), atol=1e-10)
