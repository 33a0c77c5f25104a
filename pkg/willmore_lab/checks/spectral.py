# Spectral Layer Checks

import numpy as np

from ..core.check_registry import CheckResult, below, check
from ..core.spectral import (
    SphereField,
    apply_I0pp,
    invert_I0pp,
    kernel_basis,
    laplace_beltrami,
    project_Kperp,
    sphere_grid,
)
from ..utils.config import RunConfig

SUITE = "spectral"


def _random_field(config: RunConfig) -> SphereField:
    return SphereField.random(config.verify_lmax, np.random.default_rng(config.seed))


@check(SUITE, "quadrature_weight")
def quadrature_weight(config: RunConfig) -> CheckResult:
    grid = sphere_grid(config.verify_lmax)
    return below(SUITE, "quadrature_weight", abs(float(np.sum(grid.weights)) - 4.0 * np.pi), 1e-12)


@check(SUITE, "parseval")
def parseval(config: RunConfig) -> CheckResult:
    f = _random_field(config)
    gap = abs(f.grid.integrate(f.values**2) - float(np.sum(f.coeffs**2)))
    return below(SUITE, "parseval", gap / max(1.0, f.norm() ** 2), 1e-10)


@check(SUITE, "analysis_inverts_synthesis")
def analysis_inverts_synthesis(config: RunConfig) -> CheckResult:
    f = _random_field(config)
    back = SphereField.from_values(f.values, f.lmax)
    return below(SUITE, "analysis_inverts_synthesis", float(np.max(np.abs(back.coeffs - f.coeffs))), 1e-10)


@check(SUITE, "laplacian_matches_grid_derivatives")
def laplacian_matches_grid_derivatives(config: RunConfig) -> CheckResult:
    # Delta f = f_tt + cot(theta) f_t + f_pp / sin^2(theta) on the nodes
    f = _random_field(config)
    f_t, _, f_tt, _, f_pp = f.derivatives()
    s = f.grid.sin_theta
    nodal = f_tt + np.cos(f.grid.node_theta) / s * f_t + f_pp / s**2
    gap = float(np.max(np.abs(nodal - laplace_beltrami(f).values)))
    scale = max(1.0, float(np.max(np.abs(nodal))))
    return below(SUITE, "laplacian_matches_grid_derivatives", gap / scale, 1e-9)


@check(SUITE, "kernel_annihilated")
def kernel_annihilated(config: RunConfig) -> CheckResult:
    worst = max(apply_I0pp(q, np.pi / 2).norm() for q in kernel_basis(config.verify_lmax))
    return below(SUITE, "kernel_annihilated", worst, 1e-12)


@check(SUITE, "kernel_orthonormal")
def kernel_orthonormal(config: RunConfig) -> CheckResult:
    basis = kernel_basis(config.verify_lmax)
    gram = np.array([[a.grid.integrate(a.values * b.values) for b in basis] for a in basis])
    return below(SUITE, "kernel_orthonormal", float(np.max(np.abs(gram - np.eye(4)))), 1e-12)


@check(SUITE, "quadrupole_eigenvalue")
def quadrupole_eigenvalue(config: RunConfig) -> CheckResult:
    # 2 sin^4(pi/2) I0'' = Delta(Delta + 2), which is 24 on l = 2
    lmax = config.verify_lmax
    worst = 0.0
    for m in range(-2, 3):
        y = SphereField.harmonic(lmax, 2, m)
        worst = max(worst, (apply_I0pp(y, np.pi / 2) * 2.0 - y * 24.0).norm())
    return below(SUITE, "quadrupole_eigenvalue", worst, 1e-12)


@check(SUITE, "inverse_on_complement")
def inverse_on_complement(config: RunConfig) -> CheckResult:
    f = project_Kperp(_random_field(config))
    worst = 0.0
    for rho in (0.3, 0.8, np.pi / 2, 2.2):
        worst = max(worst, (invert_I0pp(apply_I0pp(f, rho), rho) - f).norm() / f.norm())
    return below(SUITE, "inverse_on_complement", worst, 1e-12)
