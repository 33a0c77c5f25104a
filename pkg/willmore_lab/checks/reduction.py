# Reduction Solver Checks

import numpy as np

from ..core.asymptotics import loglog_slope
from ..core.check_registry import CheckResult, below, check
from ..core.errors import WindowCollapse
from ..core.metrics import MetricFamily
from ..core.reduction import find_critical, multistart_spread, solve_auxiliary
from ..utils.config import RunConfig

SUITE = "reduction"


@check(SUITE, "unperturbed_is_zero")
def unperturbed_is_zero(config: RunConfig) -> CheckResult:
    point = solve_auxiliary(MetricFamily.round(), config.point, config.rho, config.solver)
    return below(SUITE, "unperturbed_is_zero", point.w.norm() + abs(point.phi), 1e-12)


@check(SUITE, "converged_residual")
def converged_residual(config: RunConfig) -> CheckResult:
    point = solve_auxiliary(config.family, config.point, config.rho, config.solver)
    return below(SUITE, "converged_residual", point.aux_residual, config.solver.tol,
                 f"{point.iterations} iterations")


@check(SUITE, "linear_in_epsilon")
def linear_in_epsilon(config: RunConfig) -> CheckResult:
    eps = (0.02, 0.04, 0.08)
    norms = [solve_auxiliary(MetricFamily.berger(1.0 + e), config.point, 0.8, config.solver).w.norm() for e in eps]
    slope, _ = loglog_slope(eps, norms)
    return below(SUITE, "linear_in_epsilon", abs(slope - 1.0), 0.1, f"slope {slope:.4f}")


@check(SUITE, "multistart_agreement")
def multistart_agreement(config: RunConfig) -> CheckResult:
    spread = multistart_spread(config.family, config.point, config.rho, config.solver, seed=config.seed)
    return below(SUITE, "multistart_agreement", spread, 10.0 * config.solver.tol)


@check(SUITE, "critical_point")
def critical_point(config: RunConfig) -> CheckResult:
    try:
        search = find_critical(config.family, config.solver, config.optimizer, config.jobs)
    except WindowCollapse as e:
        return CheckResult(SUITE, "critical_point", False, float("nan"), 10.0 * config.solver.tol, str(e))
    if search.flat:
        return CheckResult(SUITE, "critical_point", True, 0.0, 10.0 * config.solver.tol, search.message)
    best = search.incumbent
    value = max(best.aux_residual, float(np.max(np.abs(best.kernel_coeffs))))
    return below(SUITE, "critical_point", value, 10.0 * config.solver.tol,
                 f"rho* = {best.rho:.6f}, phi* = {best.phi:.6e}")
