# Geodesic Sphere Geometry Checks

import numpy as np

from ..core.check_registry import CheckResult, below, check
from ..core.geodesics import exp_map, exp_map_inverse, geodesic_path, graph_sphere, surface_laplacian
from ..core.metrics import MetricFamily, eval_metric
from ..core.spectral import SphereField, laplace_beltrami
from ..utils.config import RunConfig

SUITE = "geometry"
ROUND_RADII = (0.3, 0.7, np.pi / 2, 2.2)


def _round_sphere(config: RunConfig, rho: float):
    return graph_sphere(MetricFamily.round(), config.point, rho, SphereField.zeros(config.lmax), config.solver.ode)


@check(SUITE, "round_mean_curvature")
def round_mean_curvature(config: RunConfig) -> CheckResult:
    worst = 0.0
    for rho in (0.3, np.pi / 2, 2.2):
        s = _round_sphere(config, rho)
        H = np.sin(2.0 * rho) / np.sin(rho) ** 2
        A2 = np.sin(2.0 * rho) ** 2 / (2.0 * np.sin(rho) ** 4)
        worst = max(
            worst,
            float(np.max(np.abs(s.H - H))) / max(abs(H), 1.0),
            float(np.max(np.abs(s.A_norm2 - A2))) / max(A2, 1.0),
        )
    return below(SUITE, "round_mean_curvature", worst, 1e-7)


@check(SUITE, "round_umbilic")
def round_umbilic(config: RunConfig) -> CheckResult:
    worst = max(float(np.max(np.sqrt(2.0 * _round_sphere(config, r).half_A0_norm2()))) for r in ROUND_RADII)
    return below(SUITE, "round_umbilic", worst, 1e-7)


@check(SUITE, "round_area")
def round_area(config: RunConfig) -> CheckResult:
    worst = max(abs(_round_sphere(config, r).area() - 4.0 * np.pi * np.sin(r) ** 2) for r in ROUND_RADII)
    return below(SUITE, "round_area", worst, 1e-8)


@check(SUITE, "round_ricci_normal")
def round_ricci_normal(config: RunConfig) -> CheckResult:
    worst = max(float(np.max(np.abs(_round_sphere(config, r).ricci_normal() - 2.0))) for r in ROUND_RADII)
    return below(SUITE, "round_ricci_normal", worst, 1e-8)


@check(SUITE, "antipodal_radius_symmetry")
def antipodal_radius_symmetry(config: RunConfig) -> CheckResult:
    worst = 0.0
    for rho in (0.3, 0.7):
        a, b = _round_sphere(config, rho), _round_sphere(config, np.pi - rho)
        worst = max(worst, abs(a.area() - b.area()), float(np.max(np.abs(np.abs(a.H) - np.abs(b.H)))))
    return below(SUITE, "antipodal_radius_symmetry", worst, 1e-8)


@check(SUITE, "laplacian_scaling")
def laplacian_scaling(config: RunConfig) -> CheckResult:
    rho = 0.7
    s = _round_sphere(config, rho)
    y = SphereField.harmonic(config.lmax, 2, 0)
    expected = laplace_beltrami(y).values / np.sin(rho) ** 2
    gap = float(np.max(np.abs(surface_laplacian(s, y) - expected))) / float(np.max(np.abs(expected)))
    return below(SUITE, "laplacian_scaling", gap, 1e-6)


@check(SUITE, "surface_invariants")
def surface_invariants(config: RunConfig) -> CheckResult:
    rng = np.random.default_rng(config.seed)
    w = SphereField.random(config.lmax, rng, scale=1e-3, l_cut=4)
    s = graph_sphere(config.family, config.point, config.rho, w, config.solver.ode)
    res = s.invariant_residuals()
    name = max(res, key=res.get)
    return below(SUITE, "surface_invariants", res[name], 1e-8, f"worst: {name}")


@check(SUITE, "geodesic_arc_length")
def geodesic_arc_length(config: RunConfig) -> CheckResult:
    family = MetricFamily.berger(1.2)
    rng = np.random.default_rng(config.seed)
    v = rng.standard_normal(3)
    v *= 1.3 / np.linalg.norm(v)
    G = eval_metric(family, config.point)
    path = geodesic_path(family, config.point, v)
    end = exp_map(family, config.point, v)
    gap = max(abs(path.length() - float(np.sqrt(v @ G @ v))), float(np.max(np.abs(path.points[-1] - end.array))))
    return below(SUITE, "geodesic_arc_length", gap, 1e-6)


@check(SUITE, "exp_map_inverse")
def exp_map_inverse_check(config: RunConfig) -> CheckResult:
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for _ in range(3):
        v = rng.standard_normal(3)
        v *= rng.uniform(0.2, 1.5) / np.linalg.norm(v)
        back = exp_map_inverse(config.family, config.point, exp_map(config.family, config.point, v))
        worst = max(worst, float(np.max(np.abs(back - v))))
    return below(SUITE, "exp_map_inverse", worst, 1e-8)
