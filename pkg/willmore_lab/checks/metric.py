# Metric and Curvature Checks

import numpy as np

from ..core.check_registry import CheckResult, below, check
from ..core.curvature import bianchi_residual, curvature_bundle
from ..core.metrics import MetricFamily, S3Point, TensorField, eval_metric
from ..utils.config import RunConfig

SUITE = "metric"

# c * g_round written as a stereographic coefficient table
ROUND_TABLE = TensorField("table", 1.0, tuple((a, a, 1.0, (0, 0, 0, 0)) for a in range(3)))


def _sample_points(config: RunConfig, n: int = 4):
    rng = np.random.default_rng(config.seed)
    return [config.point] + [S3Point.random(rng) for _ in range(n - 1)]


def berger_oracle(lam: float):
    """Frame Ricci diagonal, scalar and |Ric0|^2 of the Berger metric diag(lam, 1, 1)."""
    ric = np.array([2.0 * lam**2, 4.0 - 2.0 * lam, 4.0 - 2.0 * lam])
    return ric, 8.0 - 2.0 * lam, 32.0 * (lam - 1.0) ** 2 / 3.0


@check(SUITE, "round_anchor")
def round_anchor(config: RunConfig) -> CheckResult:
    worst = 0.0
    for pt in _sample_points(config):
        b = curvature_bundle(MetricFamily.round(), pt)
        worst = max(worst, abs(b.scalar - 6.0), float(np.max(np.abs(b.ric - 2.0 * np.eye(3)))),
                    float(np.max(np.abs(b.ric0))))
    return below(SUITE, "round_anchor", worst, 1e-8)


@check(SUITE, "berger_koszul")
def berger_koszul(config: RunConfig) -> CheckResult:
    lam = 1.2
    ric, scalar, norm2 = berger_oracle(lam)
    b = curvature_bundle(MetricFamily.berger(lam), config.point)
    worst = max(float(np.max(np.abs(b.ric - np.diag(ric)))), abs(b.scalar - scalar), abs(b.ric0_norm2 - norm2))
    return below(SUITE, "berger_koszul", worst, 1e-10, f"|Ric0|^2 = {b.ric0_norm2:.6g}")


@check(SUITE, "riemann_symmetries")
def riemann_symmetries(config: RunConfig) -> CheckResult:
    worst = 0.0
    for pt in _sample_points(config, 2):
        worst = max(worst, max(curvature_bundle(config.family, pt).symmetry_residuals().values()))
    return below(SUITE, "riemann_symmetries", worst, 1e-7)


@check(SUITE, "ricci_decomposition")
def ricci_decomposition(config: RunConfig) -> CheckResult:
    worst = max(curvature_bundle(config.family, pt).ricci_decomposition_residual() for pt in _sample_points(config, 2))
    return below(SUITE, "ricci_decomposition", worst, 1e-7)


@check(SUITE, "contracted_bianchi_group")
def contracted_bianchi_group(config: RunConfig) -> CheckResult:
    res = bianchi_residual(MetricFamily.berger(1.3), config.point)
    return below(SUITE, "contracted_bianchi_group", float(np.max(np.abs(res))), 1e-5)


@check(SUITE, "contracted_bianchi_chart")
def contracted_bianchi_chart(config: RunConfig) -> CheckResult:
    family = MetricFamily.round_plus_tensor(TensorField("hopf_modulated"), 0.05)
    worst = max(float(np.max(np.abs(bianchi_residual(family, pt, config.outer_step, config.chart_step))))
                for pt in _sample_points(config, 2))
    return below(SUITE, "contracted_bianchi_chart", worst, 1e-4)


@check(SUITE, "homothety_scaling")
def homothety_scaling(config: RunConfig) -> CheckResult:
    b = curvature_bundle(MetricFamily.homothety(0.1), config.point)
    return below(SUITE, "homothety_scaling", abs(b.scalar - 6.0 / 1.21) + b.ric0_norm2, 1e-10)


@check(SUITE, "chart_route_homothety")
def chart_route_homothety(config: RunConfig) -> CheckResult:
    # a non-left-invariant encoding of 1.1 g_round goes through the chart route
    family = MetricFamily.round_plus_tensor(ROUND_TABLE, 0.1)
    worst = 0.0
    for pt in _sample_points(config, 2):
        b = curvature_bundle(family, pt, config.chart_step)
        worst = max(worst, abs(b.scalar - 6.0 / 1.1), float(np.sqrt(b.ric0_norm2)))
    return below(SUITE, "chart_route_homothety", worst, 1e-6)


@check(SUITE, "positive_definite")
def positive_definite(config: RunConfig) -> CheckResult:
    lowest = min(float(np.linalg.eigvalsh(eval_metric(config.family, pt))[0]) for pt in _sample_points(config, 8))
    # passes when the smallest eigenvalue is positive
    return below(SUITE, "positive_definite", -lowest, 0.0, f"smallest eigenvalue {lowest:.6g}")
