# Small-Radius Asymptotics Checks

from ..core.asymptotics import (
    gluing_consistency,
    profile_residual_series,
    remainder_bound_fit,
    small_radius_energy_fit,
)
from ..core.check_registry import CheckResult, below, check
from ..core.metrics import MetricFamily
from ..utils.config import RunConfig

SUITE = "asymptotics"


def _rho4_law(config: RunConfig, branch: str, name: str) -> CheckResult:
    fit = small_radius_energy_fit(config.family, config.point, config.rho_list, config.solver, config.jobs, branch)
    if fit.degenerate:
        return CheckResult(SUITE, name, fit.target_coefficient == 0.0, 0.0, 1.0, "degenerate series")
    # normalised so that 1 is the edge of both tolerances
    value = max(abs(fit.fitted_exponent - 4.0) / 0.15, fit.relative_error / 0.1)
    detail = f"exponent {fit.fitted_exponent:.4f}, coefficient error {fit.relative_error:.3%}"
    return below(SUITE, name, value, 1.0, detail)


@check(SUITE, "geodesic_rho4_law")
def geodesic_rho4_law(config: RunConfig) -> CheckResult:
    return _rho4_law(config, "geodesic", "geodesic_rho4_law")


@check(SUITE, "profile_rho4_law")
def profile_rho4_law(config: RunConfig) -> CheckResult:
    return _rho4_law(config, "profile", "profile_rho4_law")


@check(SUITE, "reduced_energy_order")
def reduced_energy_order(config: RunConfig) -> CheckResult:
    fit = small_radius_energy_fit(config.family, config.point, config.rho_list, config.solver, config.jobs, "reduced")
    if fit.degenerate:
        return CheckResult(SUITE, "reduced_energy_order", True, 0.0, 1.0, "degenerate series")
    # exponent above 5 and a rho^4 coefficient under 5% of (pi/5)|Ric0|^2
    value = max(6.0 - fit.fitted_exponent, fit.relative_error / 0.05)
    detail = f"exponent {fit.fitted_exponent:.4f}, rho^4 coefficient {fit.fitted_coefficient:.3e}"
    return below(SUITE, "reduced_energy_order", value, 1.0, detail)


@check(SUITE, "remainder_bound")
def remainder_bound(config: RunConfig) -> CheckResult:
    fit = remainder_bound_fit(config.family, config.point, config.eps_list, config.remainder_rho_list,
                              config.solver, config.jobs)
    bound = fit.metadata["bound"]
    ratio = bound["constant"] / bound["coarse_constant"] if bound["coarse_constant"] > 0.0 else 1.0
    slope = min(fit.metadata["slopes"].values(), default=float("inf"))
    # ratio < 3 and slope >= 4.5, both scaled to 1
    value = max(ratio / 3.0, 4.5 / slope if slope > 0.0 else float("inf"))
    return below(SUITE, "remainder_bound", value, 1.0, f"C = {bound['constant']:.4g}, slope {slope:.3f}")


@check(SUITE, "w_profile_decay")
def w_profile_decay(config: RunConfig) -> CheckResult:
    fit = profile_residual_series(config.family, config.point, config.profile_rho_list, config.solver)
    if fit.degenerate:
        return CheckResult(SUITE, "w_profile_decay", True, 0.0, -0.8, "residual vanishes")
    # slope >= 0.8 written as -slope < -0.8
    return below(SUITE, "w_profile_decay", -fit.fitted_exponent, -0.8, f"slope {fit.fitted_exponent:.4f}")


@check(SUITE, "round_profile_zero")
def round_profile_zero(config: RunConfig) -> CheckResult:
    fit = profile_residual_series(MetricFamily.round(), config.point, config.profile_rho_list, config.solver)
    return below(SUITE, "round_profile_zero", max(s["residual"] for s in fit.samples), 1e-12)


@check(SUITE, "gluing_consistency")
def gluing(config: RunConfig) -> CheckResult:
    rho = config.profile_rho_list[len(config.profile_rho_list) // 2]
    gap = gluing_consistency(config.family, config.point, rho, config.solver)
    return below(SUITE, "gluing_consistency", gap, 10.0 * config.solver.tol)
