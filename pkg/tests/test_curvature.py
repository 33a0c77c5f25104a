"""Tests for curvature of metric families."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from willmore_lab.core.curvature import (
    bianchi_residual,
    curvature_bundle,
    curvature_fields,
    kulkarni_nomizu,
    traceless_ricci_linearization,
)
from willmore_lab.core.errors import FiniteDifferenceStepUnderflow
from willmore_lab.core.metrics import MetricFamily, S3Point, TensorField

ROUND_TABLE = TensorField("table", 1.0, tuple((a, a, 1.0, (0, 0, 0, 0)) for a in range(3)))


def berger_ricci(lam):
    """Frame Ricci diagonal, scalar curvature and |Ric0|^2 of diag(lam, 1, 1)."""
    return np.array([2.0 * lam**2, 4.0 - 2.0 * lam, 4.0 - 2.0 * lam]), 8.0 - 2.0 * lam, 32.0 * (lam - 1.0) ** 2 / 3.0


def test_round_sphere(identity, generic_point):
    for pt in (identity, generic_point):
        b = curvature_bundle(MetricFamily.round(), pt)
        assert b.scalar == pytest.approx(6.0, abs=1e-12)
        assert_allclose(b.ric, 2.0 * np.eye(3), atol=1e-12)
        assert_allclose(b.riem, 0.5 * kulkarni_nomizu(np.eye(3), np.eye(3)), atol=1e-12)
        assert b.ric0_norm2 == pytest.approx(0.0, abs=1e-24)


@pytest.mark.parametrize("lam", [0.8, 1.05, 1.3])
def test_berger_matches_closed_form(identity, lam):
    ric, scalar, norm2 = berger_ricci(lam)
    b = curvature_bundle(MetricFamily.berger(lam), identity)
    assert_allclose(b.ric, np.diag(ric), atol=1e-12)
    assert b.scalar == pytest.approx(scalar, abs=1e-12)
    assert b.ric0_norm2 == pytest.approx(norm2, abs=1e-12)


def test_berger_is_left_invariant(identity, generic_point):
    fam = MetricFamily.berger(1.2)
    a, b = curvature_bundle(fam, identity), curvature_bundle(fam, generic_point)
    assert_allclose(a.riem, b.riem)


def test_homothety_scales_curvature(generic_point):
    b = curvature_bundle(MetricFamily.homothety(0.1), generic_point)
    assert b.scalar == pytest.approx(6.0 / 1.21, rel=1e-12)
    assert b.ric0_norm2 == pytest.approx(0.0, abs=1e-20)


def test_chart_route_reproduces_homothety(generic_point):
    # 1.1 g_round encoded as a non-left-invariant coefficient table
    b = curvature_bundle(MetricFamily.round_plus_tensor(ROUND_TABLE, 0.1), generic_point)
    assert b.scalar == pytest.approx(6.0 / 1.1, abs=1e-6)
    assert np.sqrt(b.ric0_norm2) < 1e-6


def test_riemann_symmetries_chart_route(hopf_family, generic_point):
    b = curvature_bundle(hopf_family, generic_point)
    assert max(b.symmetry_residuals().values()) < 1e-7
    assert b.ricci_decomposition_residual() < 1e-7


def test_bianchi_identity(hopf_family, generic_point, identity):
    assert np.max(np.abs(bianchi_residual(MetricFamily.berger(1.3), identity))) < 1e-10
    assert np.max(np.abs(bianchi_residual(hopf_family, generic_point))) < 1e-4


def test_fields_are_vectorised(hopf_family, rng):
    xs = rng.standard_normal((5, 4))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    fields = curvature_fields(hopf_family, xs)
    assert fields.riem.shape == (5, 3, 3, 3, 3)
    single = curvature_bundle(hopf_family, S3Point(tuple(xs[2])))
    assert fields.scalar[2] == pytest.approx(single.scalar, rel=1e-10)


def test_step_underflow(hopf_family, identity):
    with pytest.raises(FiniteDifferenceStepUnderflow):
        curvature_bundle(hopf_family, identity, h_chart=1e-9)


def test_linearization_of_berger(identity):
    # d/d eps of Ric0 for diag(1 + eps, 1, 1) is diag(8/3, -4/3, -4/3)
    lin = traceless_ricci_linearization(MetricFamily.berger(1.05), identity)
    assert_allclose(lin.tensor, np.diag([8.0, -4.0, -4.0]) / 3.0, atol=1e-8)
    assert lin.t2 == pytest.approx(32.0 / 3.0, rel=1e-8)


def test_linearization_vanishes_for_homothety(identity):
    lin = traceless_ricci_linearization(MetricFamily.homothety(0.1), identity)
    assert np.max(np.abs(lin.tensor)) < 1e-10
