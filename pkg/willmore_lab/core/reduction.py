# Lyapunov-Schmidt reduction over the centres and radii of geodesic spheres
#
# For fixed (p, rho) the auxiliary equation P I'(S_{p,rho}(w)) = 0 is solved
# for w in the complement of K = span{1, x, y, z} by the preconditioned
# residual iteration
#     w <- w - invert_I0pp(P grad, rho) / sin^2 rho,
# the coefficient Hessian of the round energy being sin^2 rho * I0''.
# The reduced functional Phi(p, rho) = I(S_{p,rho}(w(p, rho))) is then
# maximised over S^3 x [delta, pi - delta].

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, NoConvergence, WindowCollapse
from .geodesics import DEFAULT_ODE, OdeSettings, graph_sphere
from .metrics import MetricFamily, S3Point, check_validity, hurwitz_units, quat_mul
from .spectral import (
    SphereField,
    invert_I0pp,
    kernel_components,
    project_Kperp,
)
from .willmore import FD_COEFF_STEP, conformal_energy, willmore_gradient

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Settings of the auxiliary-equation solver."""

    tol: float = 1e-8
    max_iter: int = 60
    lmax: int = 16
    delta: float = 0.15
    gradient_mode: str = "analytic"
    fd_step: float = FD_COEFF_STEP
    ode: OdeSettings = DEFAULT_ODE

    @property
    def window(self) -> Tuple[float, float]:
        return self.delta, np.pi - self.delta


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings of the search for maximisers of the reduced functional."""

    n_rho: int = 8
    max_evals: int = 200
    xatol: float = 1e-6
    fatol: float = 1e-13
    flat_tol: float = 1e-10
    secant_iter: int = 12
    boundary_margin: float = 1e-4


@dataclass
class ReducedPoint:
    """Solution of the auxiliary equation at (p, rho) and its reduced data."""

    epsilon: float
    p: S3Point
    rho: float
    w: SphereField
    phi: float
    aux_residual: float
    kernel_coeffs: np.ndarray
    iterations: int
    converged: bool
    residual_history: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "p": self.p.to_list(),
            "rho": self.rho,
            "phi": self.phi,
            "aux_residual": self.aux_residual,
            "kernel_coeffs": [float(a) for a in self.kernel_coeffs],
            "iterations": self.iterations,
            "converged": self.converged,
            "residual_history": list(self.residual_history),
            "lmax": self.w.lmax,
            "w": self.w.to_list(),
        }


def _check_window(rho: float, config: SolverConfig) -> None:
    lo, hi = config.window
    if not lo - 1e-12 <= rho <= hi + 1e-12:
        raise ConfigError(f"rho = {rho} outside the window [{lo:.4f}, {hi:.4f}]")


def solve_auxiliary(
    family: MetricFamily,
    p: S3Point,
    rho: float,
    config: SolverConfig = SolverConfig(),
    w0: Optional[SphereField] = None,
) -> ReducedPoint:
    """Solve P I'(S_{p,rho}(w)) = 0 for w in the complement of the kernel.

    Raises:
        NoConvergence: the residual stayed above config.tol; ``best`` holds the
            ReducedPoint of the smallest residual seen.
        GraphTooLarge: an iterate left the admissible band.
    """
    check_validity(family)
    _check_window(rho, config)
    w = project_Kperp(w0) if w0 is not None else SphereField.zeros(config.lmax)
    scale = np.sin(rho) ** 2
    history: List[float] = []
    best: Optional[Tuple[float, SphereField]] = None
    grad = None
    for it in range(config.max_iter + 1):
        grad = willmore_gradient(family, p, rho, w, mode=config.gradient_mode, step=config.fd_step, ode=config.ode)
        p_grad = project_Kperp(grad)
        res = p_grad.norm()
        history.append(res)
        if best is None or res < best[0]:
            best = (res, w)
        if res < config.tol:
            logger.debug("auxiliary equation converged in %d iterations (residual %.3e)", it, res)
            return _reduced(family, p, rho, w, grad, it, True, history, config)
        if it == config.max_iter:
            break
        w = w - invert_I0pp(p_grad, rho) / scale
    assert best is not None
    best_w = best[1]
    best_grad = willmore_gradient(family, p, rho, best_w, mode=config.gradient_mode, step=config.fd_step, ode=config.ode)
    flagged = _reduced(family, p, rho, best_w, best_grad, config.max_iter, False, history, config)
    raise NoConvergence(
        f"auxiliary equation at rho={rho:.4f}: residual {best[0]:.3e} after {config.max_iter} iterations",
        best=flagged,
    )


def _reduced(
    family: MetricFamily,
    p: S3Point,
    rho: float,
    w: SphereField,
    grad: SphereField,
    iterations: int,
    converged: bool,
    history: List[float],
    config: SolverConfig,
) -> ReducedPoint:
    phi = conformal_energy(graph_sphere(family, p, rho, w, config.ode))
    return ReducedPoint(
        epsilon=family.epsilon,
        p=p,
        rho=float(rho),
        w=w,
        phi=float(phi),
        aux_residual=float(project_Kperp(grad).norm()),
        kernel_coeffs=kernel_components(grad),
        iterations=iterations,
        converged=converged,
        residual_history=history,
    )


@lru_cache(maxsize=512)
def reduced_point(family: MetricFamily, p: S3Point, rho: float, config: SolverConfig = SolverConfig()) -> ReducedPoint:
    """Cached solve_auxiliary from w = 0."""
    return solve_auxiliary(family, p, float(rho), config)


def reduced_functional(family: MetricFamily, p: S3Point, rho: float, config: SolverConfig = SolverConfig()) -> float:
    """Phi(p, rho) = I(S_{p,rho}(w(p, rho)))."""
    return reduced_point(family, p, rho, config).phi


def kernel_coefficients(reduced: ReducedPoint) -> np.ndarray:
    """(I'(S_{p,rho}(w)), q_i) for i = 0..3."""
    return np.asarray(reduced.kernel_coeffs, dtype=float)


# Search for critical points of Phi

@dataclass
class CriticalSearch:
    """Outcome of find_critical with the evaluation trail."""

    incumbent: ReducedPoint
    trail: List[Dict[str, Any]]
    flat: bool
    critical: bool
    boundary: bool
    message: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "incumbent": self.incumbent.to_dict(),
            "flat": self.flat,
            "critical": self.critical,
            "boundary": self.boundary,
            "message": self.message,
            "trail": self.trail,
        }


def _record(stage: str, point: ReducedPoint) -> Dict[str, Any]:
    return {
        "stage": stage,
        "p": point.p.to_list(),
        "rho": point.rho,
        "phi": point.phi,
        "aux_residual": point.aux_residual,
        "converged": point.converged,
    }


def _grid_task(args: Tuple[MetricFamily, S3Point, float, SolverConfig]) -> Optional[ReducedPoint]:
    family, p, rho, config = args
    try:
        return solve_auxiliary(family, p, rho, config)
    except NoConvergence as exc:
        logger.warning("grid point rho=%.4f dropped: %s", rho, exc)
        return None


def reduce_many(tasks: Sequence[Tuple[MetricFamily, S3Point, float, SolverConfig]], jobs: int = 1) -> List[Optional[ReducedPoint]]:
    """solve_auxiliary over (family, p, rho, config) tasks in order; failures become None."""
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_grid_task, tasks))
    return [_grid_task(t) for t in tasks]


def _rho_grid(config: SolverConfig, n: int) -> np.ndarray:
    lo, hi = config.window
    return lo + (hi - lo) * (np.arange(n) + 0.5) / n


def _chart_point(base: S3Point, y: np.ndarray) -> S3Point:
    """Round exponential chart at base, y in frame components."""
    r = float(np.linalg.norm(y))
    step = np.array([np.cos(r), *(np.sinc(r / np.pi) * y)])
    return S3Point(tuple(quat_mul(base.array, step)))


def find_critical(
    family: MetricFamily,
    config: SolverConfig = SolverConfig(),
    optimizer: OptimizerConfig = OptimizerConfig(),
    jobs: int = 1,
    start: Optional[S3Point] = None,
) -> CriticalSearch:
    """Maximise Phi over S^3 x [delta, pi - delta].

    The radius grid is laid over ``start`` when given, otherwise over the
    identity (left-invariant families) or the 24 Hurwitz units.

    Raises:
        WindowCollapse: the maximiser sits on the rho-window boundary; the
            search result is attached as ``incumbent``.
        NoConvergence: no grid point could be reduced.
    """
    check_validity(family)
    rhos = _rho_grid(config, optimizer.n_rho)
    if start is not None:
        centres = [start]
    else:
        centres = [S3Point.identity()] if family.is_group else hurwitz_units()
    # (rho, quaternion) lexicographic order fixes the tie-breaking
    tasks = sorted(((family, q, float(r), config) for r in rhos for q in centres), key=lambda t: (t[2], t[1].q))
    results = reduce_many(tasks, jobs)
    trail = [_record("grid", r) for r in results if r is not None]
    points = [r for r in results if r is not None]
    if not points:
        raise NoConvergence("no grid point of the reduced functional converged")

    phis = np.array([pt.phi for pt in points])
    best = points[int(np.argmax(phis))]
    logger.info("grid stage: %d points, max phi %.6e at rho=%.4f", len(points), best.phi, best.rho)
    if float(np.max(phis) - np.min(phis)) < optimizer.flat_tol:
        return CriticalSearch(best, trail, True, True, False, "flat landscape: manifold of critical points")

    if family.is_group:
        best = _refine_radius(family, best, config, optimizer, trail)
    else:
        best = _refine_full(family, best, config, optimizer, trail)

    lo, hi = config.window
    boundary = min(best.rho - lo, hi - best.rho) < optimizer.boundary_margin
    critical = best.aux_residual < 10.0 * config.tol and float(np.max(np.abs(best.kernel_coeffs))) < 10.0 * config.tol
    message = "critical point" if critical else "maximiser found without criticality certificate"
    search = CriticalSearch(best, trail, False, critical and not boundary, boundary, message)
    if boundary:
        raise WindowCollapse(f"maximiser at rho={best.rho:.6f} on the window boundary", incumbent=search)
    return search


def _safe_point(family: MetricFamily, p: S3Point, rho: float, config: SolverConfig) -> Optional[ReducedPoint]:
    try:
        return reduced_point(family, p, rho, config)
    except NoConvergence as exc:
        logger.debug("refinement point dropped: %s", exc)
        return None


def _refine_radius(
    family: MetricFamily,
    start: ReducedPoint,
    config: SolverConfig,
    optimizer: OptimizerConfig,
    trail: List[Dict[str, Any]],
) -> ReducedPoint:
    """Left-invariant families: Phi depends on rho only."""
    lo, hi = config.window
    p = start.p

    def objective(z: np.ndarray) -> float:
        pt = _safe_point(family, p, float(np.clip(z[0], lo, hi)), config)
        if pt is None:
            return np.inf
        trail.append(_record("nelder-mead", pt))
        return -pt.phi

    res = minimize(
        objective, [start.rho], method="Nelder-Mead", bounds=[(lo, hi)],
        options={"maxfev": optimizer.max_evals, "xatol": optimizer.xatol, "fatol": optimizer.fatol},
    )
    best = reduced_point(family, p, float(np.clip(res.x[0], lo, hi)), config)
    logger.info("radius refinement: rho=%.6f phi=%.6e", best.rho, best.phi)
    return _secant_polish(family, best, config, optimizer, trail)


def _secant_polish(
    family: MetricFamily,
    start: ReducedPoint,
    config: SolverConfig,
    optimizer: OptimizerConfig,
    trail: List[Dict[str, Any]],
) -> ReducedPoint:
    """Zero of A_0(rho), proportional to d Phi / d rho on the reduced branch."""
    lo, hi = config.window
    r0, r1 = start.rho, min(start.rho + 1e-3, hi)
    a0 = start.kernel_coeffs[0]
    pt1 = reduced_point(family, start.p, r1, config)
    a1 = pt1.kernel_coeffs[0]
    best = start
    for _ in range(optimizer.secant_iter):
        if abs(a1) < abs(best.kernel_coeffs[0]):
            best = pt1
        if abs(a1) < config.tol or a1 == a0:
            break
        r2 = float(np.clip(r1 - a1 * (r1 - r0) / (a1 - a0), lo, hi))
        r0, a0 = r1, a1
        pt1 = reduced_point(family, start.p, r2, config)
        trail.append(_record("secant", pt1))
        r1, a1 = r2, pt1.kernel_coeffs[0]
    if abs(a1) < abs(best.kernel_coeffs[0]):
        best = pt1
    return best


def _refine_full(
    family: MetricFamily,
    start: ReducedPoint,
    config: SolverConfig,
    optimizer: OptimizerConfig,
    trail: List[Dict[str, Any]],
) -> ReducedPoint:
    """Nelder-Mead in (exp chart at the incumbent centre) x rho."""
    lo, hi = config.window
    base = start.p

    def objective(z: np.ndarray) -> float:
        pt = _safe_point(family, _chart_point(base, z[:3]), float(np.clip(z[3], lo, hi)), config)
        if pt is None:
            return np.inf
        trail.append(_record("nelder-mead", pt))
        return -pt.phi

    simplex = np.vstack([np.r_[0.0, 0.0, 0.0, start.rho], np.r_[0.0, 0.0, 0.0, start.rho] + 0.1 * np.eye(4)])
    simplex[1:, 3] = np.clip(simplex[1:, 3], lo, hi)
    res = minimize(
        objective, simplex[0], method="Nelder-Mead",
        bounds=[(None, None)] * 3 + [(lo, hi)],
        options={
            "maxfev": optimizer.max_evals, "xatol": optimizer.xatol,
            "fatol": optimizer.fatol, "initial_simplex": simplex,
        },
    )
    best = reduced_point(family, _chart_point(base, res.x[:3]), float(np.clip(res.x[3], lo, hi)), config)
    logger.info("full refinement: rho=%.6f phi=%.6e (%d evaluations)", best.rho, best.phi, res.nfev)
    return best


def multistart_spread(
    family: MetricFamily,
    p: S3Point,
    rho: float,
    config: SolverConfig = SolverConfig(),
    n_starts: int = 3,
    scale: float = 1e-3,
    seed: int = 0,
) -> float:
    """Largest L2 distance between solutions restarted from small random w."""
    rng = np.random.default_rng(seed)
    ref = solve_auxiliary(family, p, rho, config)
    spread = 0.0
    for _ in range(n_starts):
        w0 = SphereField.random(config.lmax, rng, scale=scale, l_cut=4)
        sol = solve_auxiliary(family, p, rho, config, w0=w0)
        spread = max(spread, (sol.w - ref.w).norm())
    return spread
