# Willmore Functional Checks

from typing import Optional

import numpy as np

from ..core.check_registry import CheckResult, below, check
from ..core.geodesics import graph_sphere
from ..core.metrics import MetricFamily, S3Point
from ..core.spectral import SphereField
from ..core.willmore import (
    conformal_energy,
    energy,
    hessian_spectrum,
    variation_identity_residuals,
    willmore_gradient,
)
from ..utils.config import RunConfig

SUITE = "energy"
# band limit of the perturbed graphs, whatever the configured lmax
PERTURBED_LMAX = 16


def _lmax(config: RunConfig) -> int:
    return max(config.lmax, PERTURBED_LMAX)


def _perturbed(config: RunConfig, family: Optional[MetricFamily] = None, p: Optional[S3Point] = None):
    rng = np.random.default_rng(config.seed)
    w = SphereField.random(_lmax(config), rng, scale=1e-3, l_cut=4)
    return graph_sphere(family or config.family, p or config.point, config.rho, w, config.solver.ode)


@check(SUITE, "round_umbilic_energy")
def round_umbilic_energy(config: RunConfig) -> CheckResult:
    zero = SphereField.zeros(config.lmax)
    worst = max(
        abs(conformal_energy(graph_sphere(MetricFamily.round(), config.point, r, zero, config.solver.ode)))
        for r in (0.3, np.pi / 2, 2.2)
    )
    return below(SUITE, "round_umbilic_energy", worst, 1e-9)


@check(SUITE, "traceless_form_identity")
def traceless_form_identity(config: RunConfig) -> CheckResult:
    round_report = energy(graph_sphere(
        MetricFamily.round(), config.point, 0.5, SphereField.harmonic(config.lmax, 2, 0, 0.01), config.solver.ode
    ))
    report = energy(_perturbed(config))
    if round_report.I <= 0.0:
        return CheckResult(SUITE, "traceless_form_identity", False, round_report.I, 0.0, "I not positive off umbilic")
    return below(SUITE, "traceless_form_identity", max(round_report.consistency(), report.consistency()), 1e-8)


@check(SUITE, "gauss_bonnet")
def gauss_bonnet(config: RunConfig) -> CheckResult:
    report = energy(_perturbed(config))
    return below(SUITE, "gauss_bonnet", abs(report.gauss_defect), 1e-6, f"I = {report.I:.6e}")


@check(SUITE, "left_translation_invariance")
def left_translation_invariance(config: RunConfig) -> CheckResult:
    family = MetricFamily.berger(1.0 + max(abs(config.family.epsilon), 0.05))
    q = S3Point.random(np.random.default_rng(config.seed + 1))
    base = conformal_energy(_perturbed(config, family))
    moved = conformal_energy(_perturbed(config, family, config.point.left_translate(q)))
    return below(SUITE, "left_translation_invariance", abs(base - moved), 1e-9)


@check(SUITE, "gradient_directional")
def gradient_directional(config: RunConfig) -> CheckResult:
    rng = np.random.default_rng(config.seed)
    w = SphereField.random(_lmax(config), rng, scale=1e-3, l_cut=4)
    grad = willmore_gradient(config.family, config.point, config.rho, w, config.solver.gradient_mode,
                             config.solver.fd_step, config.solver.ode)
    h = 1e-4
    worst = 0.0
    for _ in range(5):
        v = SphereField.random(_lmax(config), rng, scale=1.0, l_cut=6)
        v = v / v.norm()
        plus = conformal_energy(graph_sphere(config.family, config.point, config.rho, w + v * h, config.solver.ode))
        minus = conformal_energy(graph_sphere(config.family, config.point, config.rho, w - v * h, config.solver.ode))
        worst = max(worst, abs(grad.inner(v) - (plus - minus) / (2.0 * h)))
    return below(SUITE, "gradient_directional", worst, 1e-6)


@check(SUITE, "second_variation")
def second_variation(config: RunConfig) -> CheckResult:
    worst = 0.0
    for rho in (0.6, np.pi / 2):
        rows = hessian_spectrum(MetricFamily.round(), config.point, rho, (2, 3), config.lmax, ode=config.solver.ode)
        worst = max(worst, max(r["rel_error"] for r in rows))
    return below(SUITE, "second_variation", worst, 1e-3)


@check(SUITE, "kernel_flatness")
def kernel_flatness(config: RunConfig) -> CheckResult:
    worst = 0.0
    for rho in (0.6, np.pi / 2):
        rows = hessian_spectrum(MetricFamily.round(), config.point, rho, (0, 1), config.lmax, ode=config.solver.ode)
        worst = max(worst, max(abs(r["fd"]) for r in rows))
    return below(SUITE, "kernel_flatness", worst, 1e-6)


@check(SUITE, "round_variation_identities")
def round_variation_identities(config: RunConfig) -> CheckResult:
    s = graph_sphere(MetricFamily.round(), config.point, 0.8, SphereField.zeros(config.lmax), config.solver.ode)
    report = variation_identity_residuals(s, SphereField.harmonic(config.lmax, 2, 0), ds=1e-3)
    name = max(report.residuals, key=report.residuals.get)
    return below(SUITE, "round_variation_identities", report.max_residual(), 1e-4, f"worst: {name}")


@check(SUITE, "variation_identities")
def variation_identities(config: RunConfig) -> CheckResult:
    s = _perturbed(config)
    u = SphereField.harmonic(_lmax(config), 2, 1) + SphereField.harmonic(_lmax(config), 3, -2, 0.5)
    report = variation_identity_residuals(s, u, ds=1e-3)
    name = max(report.residuals, key=report.residuals.get)
    return below(SUITE, "variation_identities", report.max_residual(), 1e-4, f"worst: {name}")
