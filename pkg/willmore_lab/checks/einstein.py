# Einstein Diagnostics Checks

import numpy as np

from ..core.check_registry import CheckResult, below, check
from ..core.curvature import bianchi_residual
from ..core.einstein import (
    Classification,
    classify_family,
    constant_curvature_residual,
    default_probes,
    normal_coordinate_expansion,
    probe_points,
)
from ..core.metrics import MetricFamily, TensorField
from ..utils.config import RunConfig

SUITE = "einstein"

BERGER_T2 = 32.0 / 3.0


def classify(config: RunConfig, family: MetricFamily) -> Classification:
    probes = default_probes(family, config.probe_radius, config.probe_count)
    return classify_family(family, eps_probe=probes, floor=config.coefficient_floor,
                           threshold=config.homothety_threshold)


def _expect(name: str, result: Classification, case: str, k0, value: float, threshold: float) -> CheckResult:
    detail = f"case {result.case}, k0 {result.k0}"
    if result.case != case or result.k0 != k0:
        return CheckResult(SUITE, name, False, value, threshold, detail)
    return below(SUITE, name, value, threshold, detail)


@check(SUITE, "round_is_case_three")
def round_is_case_three(config: RunConfig) -> CheckResult:
    result = classify(config, MetricFamily.round())
    r_err = abs(result.r - 1.0) if result.r is not None else float("inf")
    return _expect("round_is_case_three", result, "III", None, r_err, 1e-6)


@check(SUITE, "homothety_is_case_three")
def homothety_is_case_three(config: RunConfig) -> CheckResult:
    result = classify(config, MetricFamily.homothety(0.1))
    r_err = abs(result.r - 1.1) if result.r is not None else float("inf")
    return _expect("homothety_is_case_three", result, "III", None, r_err, 1e-6)


@check(SUITE, "berger_is_case_one")
def berger_is_case_one(config: RunConfig) -> CheckResult:
    result = classify(config, MetricFamily.berger(1.05))
    return _expect("berger_is_case_one", result, "I", 2, abs(result.coefficient - BERGER_T2) / BERGER_T2, 1e-3)


@check(SUITE, "conformal_linear_is_case_two")
def conformal_linear_is_case_two(config: RunConfig) -> CheckResult:
    result = classify(config, MetricFamily.round_plus_tensor(TensorField("conformal_linear"), 0.05))
    return _expect("conformal_linear_is_case_two", result, "II", 4, result.residuals["bianchi"], 1e-4)


@check(SUITE, "non_round_detected")
def non_round_detected(config: RunConfig) -> CheckResult:
    report = constant_curvature_residual(MetricFamily.berger(1.1), probe_points())
    # residual > 1e-3 written as -residual < -1e-3
    return below(SUITE, "non_round_detected", -report.residual, -1e-3, f"residual {report.residual:.4g}")


@check(SUITE, "normal_coordinates")
def normal_coordinates(config: RunConfig) -> CheckResult:
    report = normal_coordinate_expansion(MetricFamily.berger(1.1), config.point, seed=config.seed)
    return below(SUITE, "normal_coordinates", report.quadratic_error, 1e-4,
                 f"inversion error {report.inversion_error:.2e}")


@check(SUITE, "bianchi_family_wide")
def bianchi_family_wide(config: RunConfig) -> CheckResult:
    worst = max(float(np.max(np.abs(bianchi_residual(config.family, q, config.outer_step, config.chart_step))))
                for q in probe_points())
    return below(SUITE, "bianchi_family_wide", worst, 1e-4)
