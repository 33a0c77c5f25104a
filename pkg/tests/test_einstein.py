"""Tests for the Einstein-type diagnostics and the Case I / II / III split."""

import numpy as np
import pytest

from willmore_lab.core.errors import ConfigError, FitIllConditioned
from willmore_lab.core.einstein import (
    classify_family,
    constant_curvature_residual,
    default_probes,
    degeneracy_order,
    homothety_detect,
    normal_coordinate_expansion,
    probe_points,
)
from willmore_lab.core.metrics import MetricFamily, TensorField

BERGER_T2 = 32.0 / 3.0


def test_default_probes_stay_inside_validity():
    probes = default_probes(MetricFamily.homothety(0.1))
    assert len(probes) == 9
    assert max(abs(e) for e in probes) < 0.2
    assert probes == sorted(probes, reverse=True)


def test_probe_points():
    pts = probe_points()
    assert len(pts) == 3
    assert pts[0].q == (1.0, 0.0, 0.0, 0.0)


def test_berger_degeneracy_order(identity):
    report = degeneracy_order(MetricFamily.berger(1.05), identity)
    assert report.k0 == 2
    assert report.coefficient == pytest.approx(BERGER_T2, rel=1e-3)
    assert report.order_norms[0] < 1e-10
    assert not report.infinite


def test_homothety_degeneracy_is_infinite(generic_point):
    report = degeneracy_order(MetricFamily.homothety(0.1), generic_point)
    assert report.infinite
    assert report.to_dict()["k0"] == "infinite"


def test_eps_independent_traceless_ricci(identity):
    round_family = MetricFamily.round()
    report = degeneracy_order(round_family, identity, eps_probe=default_probes(round_family, 0.2, 9))
    assert report.infinite
    assert len(report.order_norms) == 4
    assert max(report.order_norms) < 1e-20
    result = classify_family(round_family, eps_probe=default_probes(round_family, 0.2, 9))
    assert result.case == "III"
    assert result.k0 is None


def test_berger_degeneracy_with_odd_probe_count(identity):
    berger = MetricFamily.berger(1.05)
    report = degeneracy_order(berger, identity, eps_probe=default_probes(berger, 0.2, 7))
    assert report.k0 == 2
    assert report.coefficient == pytest.approx(BERGER_T2, rel=1e-3)


def test_degeneracy_needs_enough_probes(identity):
    with pytest.raises(FitIllConditioned):
        degeneracy_order(MetricFamily.berger(1.05), identity, eps_probe=[0.1, -0.1, 0.05])
    with pytest.raises(FitIllConditioned):
        degeneracy_order(MetricFamily.berger(1.05), identity, eps_probe=[0.0] * 6)


def test_constant_curvature_residual():
    assert constant_curvature_residual(MetricFamily.round(), probe_points()).residual < 1e-12
    report = constant_curvature_residual(MetricFamily.berger(1.1), probe_points())
    assert report.residual > 1e-3
    with pytest.raises(ConfigError):
        constant_curvature_residual(MetricFamily.round(), probe_points()[:1])


def test_homothety_detection():
    cert = homothety_detect(MetricFamily.homothety(0.1), probe_points())
    assert cert.r == pytest.approx(1.1, abs=1e-6)
    assert homothety_detect(MetricFamily.berger(1.1), probe_points()).r is None


def test_classify_round():
    result = classify_family(MetricFamily.round())
    assert result.case == "III"
    assert result.k0 is None
    assert result.r == pytest.approx(1.0, abs=1e-6)


def test_classify_homothety():
    result = classify_family(MetricFamily.homothety(0.1))
    assert result.case == "III"
    assert result.r == pytest.approx(1.1, abs=1e-6)
    assert result.amplitude is None


def test_classify_berger():
    result = classify_family(MetricFamily.berger(1.05))
    assert result.case == "I"
    assert result.k0 == 2
    assert result.coefficient == pytest.approx(BERGER_T2, rel=1e-3)
    assert result.amplitude == pytest.approx(0.05 * np.sqrt(BERGER_T2), rel=1e-3)
    assert result.residuals["bianchi"] < 1e-8
    doc = result.to_dict()
    assert doc["case"] == "I"
    assert len(doc["degeneracy"]) == 3


@pytest.mark.slow
def test_classify_conformal_linear():
    # x1 g_round is a first spherical harmonic times g_round, so Ric0 starts at eps^2
    result = classify_family(MetricFamily.round_plus_tensor(TensorField("conformal_linear"), 0.05))
    assert result.case == "II"
    assert result.k0 == 4


@pytest.mark.slow
def test_normal_coordinates(generic_point):
    report = normal_coordinate_expansion(MetricFamily.berger(1.1), generic_point)
    assert report.quadratic_error < 1e-4
    assert report.inversion_error < 1e-8
