# Geodesics, exponential-map differentials and normal graphs over geodesic spheres
#
# A geodesic is integrated in the left-invariant frame: x' = x * (0, a),
# a'^k = -Gamma^k_ij a^i a^j. Its variation (x * (0, b), da) obeys
#     b'  = 2 b x a + da
#     da' = -(E_b Gamma)(a, a) - (Gamma^m_ij + Gamma^m_ji) a^i da^j
# so exp-map differentials come out of the same integration. A RadialFan holds
# the geodesics from p in every grid direction over the radial window
# [rho - D, rho + D], D = min(rho, pi - rho) / 2, as Chebyshev series; graph
# spheres exp_p((rho + w) Theta) are read off the fan without re-integrating.

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import chebyshev
from scipy.integrate import solve_ivp, trapezoid

from .curvature import CurvatureFields, connection_derivative, curvature_fields, frame_connection
from .errors import ConfigError, ExpInversionFailure, GraphTooLarge, IntegratorFailure
from .metrics import (
    MetricFamily,
    S3Point,
    check_validity,
    metric_sqrt_inv,
    pure,
    quat_conj,
    quat_mul,
)
from .spectral import SphereField, SphereGrid, sphere_grid

logger = logging.getLogger(__name__)

STATE_SIZE = 25  # x(4) a(3) b(3x3) da(3x3)
MAX_EXP_LENGTH = np.pi + 0.5


@dataclass(frozen=True)
class OdeSettings:
    """Integrator settings shared by every geodesic computation."""

    method: str = "DOP853"
    rtol: float = 1e-12
    atol: float = 1e-12
    n_cheb: int = 32


DEFAULT_ODE = OdeSettings()


def _round_log(q: np.ndarray) -> np.ndarray:
    """Round-metric logarithm at 1 of unit quaternions q, in frame components."""
    v = q[..., 1:]
    s = np.linalg.norm(v, axis=-1, keepdims=True)
    angle = np.arctan2(s, q[..., :1])
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(s > 1e-15, angle / s, 1.0)
    return factor * v


def _make_rhs(family: MetricFamily, n: int, jacobi: bool) -> Callable[[float, np.ndarray], np.ndarray]:
    width = STATE_SIZE if jacobi else 7
    if family.is_group:
        const_gam = frame_connection(family, np.array([[1.0, 0.0, 0.0, 0.0]]))

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        Y = y.reshape(n, width)
        x, a = Y[:, :4], Y[:, 4:7]
        gam = const_gam if family.is_group else frame_connection(family, x)
        out = np.empty_like(Y)
        out[:, :4] = quat_mul(x, pure(a))
        out[:, 4:7] = -np.einsum("nijk,ni,nj->nk", np.broadcast_to(gam, (n, 3, 3, 3)), a, a)
        if jacobi:
            b = Y[:, 7:16].reshape(n, 3, 3)
            da = Y[:, 16:25].reshape(n, 3, 3)
            gsym = gam + gam.transpose(0, 2, 1, 3)
            out[:, 7:16] = (2.0 * np.cross(b, a[:, None, :]) + da).reshape(n, 9)
            dda = -np.einsum("nijm,ni,nkj->nkm", np.broadcast_to(gsym, (n, 3, 3, 3)), a, da)
            if not family.is_group:
                dgam = connection_derivative(family, x, b)
                dda -= np.einsum("nkijm,ni,nj->nkm", dgam, a, a)
            out[:, 16:25] = dda.reshape(n, 9)
        return out.reshape(-1)

    return rhs


def shoot(
    family: MetricFamily,
    x0: np.ndarray,
    a0: np.ndarray,
    t_eval: np.ndarray,
    da0: Optional[np.ndarray] = None,
    ode: OdeSettings = DEFAULT_ODE,
) -> np.ndarray:
    """Integrate N geodesics (and, if da0 is given, their Jacobi fields).

    Returns the states at t_eval, shape (len(t_eval), N, 7 or 25).
    """
    x0 = np.atleast_2d(x0)
    a0 = np.atleast_2d(a0)
    n = a0.shape[0]
    x0 = np.broadcast_to(x0, (n, 4))
    jacobi = da0 is not None
    width = STATE_SIZE if jacobi else 7
    y0 = np.zeros((n, width))
    y0[:, :4] = x0
    y0[:, 4:7] = a0
    if jacobi:
        y0[:, 16:25] = np.broadcast_to(da0, (n, 3, 3)).reshape(n, 9)
    t_end = float(np.max(t_eval))
    if t_end <= 0.0:
        return np.broadcast_to(y0, (len(t_eval), n, width)).copy()
    sol = solve_ivp(
        _make_rhs(family, n, jacobi),
        (0.0, t_end),
        y0.reshape(-1),
        method=ode.method,
        t_eval=t_eval,
        rtol=ode.rtol,
        atol=ode.atol,
    )
    if not sol.success:
        raise IntegratorFailure(f"geodesic integration failed: {sol.message}")
    return sol.y.T.reshape(len(t_eval), n, width)


def _speed(family: MetricFamily, x: np.ndarray, a: np.ndarray) -> np.ndarray:
    G = family.metric_frame(x)
    return np.sqrt(np.einsum("ni,nij,nj->n", a, G, a))


def exp_map(family: MetricFamily, p: S3Point, v: np.ndarray, ode: OdeSettings = DEFAULT_ODE) -> S3Point:
    """exp_p(v) for v given in frame components at p."""
    check_validity(family)
    v = np.asarray(v, dtype=float)
    length = float(_speed(family, p.array[None, :], v[None, :])[0])
    if length > MAX_EXP_LENGTH:
        raise ConfigError(f"|v| = {length:.4f} exceeds {MAX_EXP_LENGTH:.4f}")
    if length == 0.0:
        return p
    states = shoot(family, p.array, v, np.array([1.0]), ode=ode)
    return S3Point(tuple(states[-1, 0, :4]))


@dataclass
class GeodesicPath:
    """Dense samples of one geodesic and its g-speed."""

    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    speeds: np.ndarray

    def length(self) -> float:
        return float(trapezoid(self.speeds, self.t))


def geodesic_path(
    family: MetricFamily, p: S3Point, v: np.ndarray, n_samples: int = 201, ode: OdeSettings = DEFAULT_ODE
) -> GeodesicPath:
    check_validity(family)
    t = np.linspace(0.0, 1.0, n_samples)
    states = shoot(family, p.array, np.asarray(v, dtype=float), t, ode=ode)[:, 0, :]
    return GeodesicPath(t, states[:, :4], states[:, 4:7], _speed(family, states[:, :4], states[:, 4:7]))


def exp_differential(
    family: MetricFamily, p: S3Point, vs: np.ndarray, ode: OdeSettings = DEFAULT_ODE
) -> Tuple[np.ndarray, np.ndarray]:
    """Endpoints exp_p(v) and differentials for a batch of vectors vs (M, 3).

    ``J[m, :, k]`` holds the frame components at the endpoint of d exp_p(v_m)[e_k].
    """
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    states = shoot(family, p.array, vs, np.array([1.0]), da0=np.eye(3), ode=ode)[-1]
    J = np.swapaxes(states[:, 7:16].reshape(-1, 3, 3), 1, 2)
    return states[:, :4], J


def exp_map_inverse_batch(
    family: MetricFamily,
    p: S3Point,
    targets: np.ndarray,
    tol: float = 1e-11,
    max_iter: int = 30,
    ode: OdeSettings = DEFAULT_ODE,
) -> np.ndarray:
    """Newton inversion of exp_p for targets (M, 4), starting from the round log."""
    check_validity(family)
    targets = np.atleast_2d(targets)
    G = family.metric_frame(p.array[None, :])[0]
    v = _round_log(quat_mul(quat_conj(p.array)[None, :], targets))
    for it in range(max_iter):
        ends, J = exp_differential(family, p, v, ode=ode)
        r = _round_log(quat_mul(quat_conj(ends), targets))
        err = float(np.max(np.linalg.norm(r, axis=1)))
        if err < tol:
            logger.debug("exp inverse converged in %d iterations", it)
            return v
        v = v + np.linalg.solve(J, r[..., None])[..., 0]
        if np.any(np.sqrt(np.einsum("ni,ij,nj->n", v, G, v)) > MAX_EXP_LENGTH):
            break
    raise ExpInversionFailure(f"exp-map inversion stalled (residual {err:.3e})")


def exp_map_inverse(family: MetricFamily, p: S3Point, x: S3Point, **kwargs: Any) -> np.ndarray:
    """Frame vector v at p with exp_p(v) = x."""
    return exp_map_inverse_batch(family, p, x.array[None, :], **kwargs)[0]


# Radial fans

@dataclass(frozen=True, eq=False)
class RadialFan:
    """Chebyshev interpolant of the geodesics from a centre along every grid direction."""

    family: MetricFamily
    center: S3Point
    rho: float
    half_width: float
    lmax: int
    coeffs: np.ndarray
    unit_speed: np.ndarray

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        s = (np.asarray(r, dtype=float) - self.rho) / self.half_width
        if np.any(np.abs(s) > 1.0 + 1e-12):
            raise GraphTooLarge(
                f"radii outside the fan window [{self.rho - self.half_width:.4f}, "
                f"{self.rho + self.half_width:.4f}]"
            )
        return chebyshev.chebval(s[:, None], self.coeffs, tensor=False)


def fan_half_width(rho: float) -> float:
    return 0.5 * min(rho, np.pi - rho)


@lru_cache(maxsize=32)
def _cached_fan(family: MetricFamily, center: Tuple[float, ...], rho: float, lmax: int, ode: OdeSettings) -> RadialFan:
    grid = sphere_grid(lmax)
    x0 = np.array(center)
    S = metric_sqrt_inv(family.metric_frame(x0[None, :])[0])
    half = fan_half_width(rho)
    nodes = np.sort(np.cos(np.pi * (np.arange(ode.n_cheb) + 0.5) / ode.n_cheb))
    states = shoot(family, x0, grid.directions @ S, rho + half * nodes, da0=S, ode=ode)
    coeffs = chebyshev.chebfit(nodes, states.reshape(ode.n_cheb, -1), ode.n_cheb - 1)
    logger.debug("integrated radial fan: %s rho=%.6f lmax=%d", family.kind, rho, lmax)
    return RadialFan(
        family, S3Point(center), rho, half, lmax,
        coeffs.reshape(ode.n_cheb, grid.n_nodes, STATE_SIZE), S,
    )


def radial_fan(family: MetricFamily, p: S3Point, rho: float, lmax: int, ode: OdeSettings = DEFAULT_ODE) -> RadialFan:
    """Fan at p; left-invariant families reuse the fan at the identity."""
    if not 0.0 < rho < np.pi:
        raise ConfigError(f"rho must lie in (0, pi), got {rho}")
    center = S3Point.identity() if family.is_group else p
    return _cached_fan(family, center.q, float(rho), int(lmax), ode)


# Graph spheres

@dataclass
class ImmersedSphere:
    """Sampled normal graph exp_p((rho + w(Theta)) Theta) and its extrinsic geometry.

    Vectors are frame components at the node; tangents[:, i] is d Psi / d theta_i
    with theta_0 = colatitude, theta_1 = longitude.
    """

    family: MetricFamily
    center: S3Point
    rho: float
    w: SphereField
    grid: SphereGrid
    position: np.ndarray
    radial: np.ndarray
    tangents: np.ndarray
    metric: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray
    gamma_inv: np.ndarray
    A: np.ndarray
    H: np.ndarray
    A0: np.ndarray
    D: np.ndarray
    A_norm2: np.ndarray
    area_el: np.ndarray
    christoffel: np.ndarray
    rad_normal: np.ndarray
    connection: np.ndarray = field(repr=False)
    _curvature: Dict[bool, CurvatureFields] = field(default_factory=dict, repr=False)

    def ambient(self, derivatives: bool = False) -> CurvatureFields:
        """Ambient curvature at the node positions, computed once per surface."""
        if derivatives in self._curvature:
            return self._curvature[derivatives]
        if not derivatives and True in self._curvature:
            return self._curvature[True]
        fields = curvature_fields(self.family, self.position, derivatives=derivatives)
        self._curvature[derivatives] = fields
        return fields

    def ricci_normal(self) -> np.ndarray:
        """Ric(nu, nu) at every node."""
        return np.einsum("ni,nij,nj->n", self.nu, self.ambient().ric, self.nu)

    def area(self) -> float:
        return self.grid.integrate(self.area_el)

    def integrate(self, values: np.ndarray) -> float:
        """Integral against d mu of the surface."""
        return self.grid.integrate(values * self.area_el)

    def half_A0_norm2(self) -> np.ndarray:
        g = self.gamma_inv
        return 0.5 * np.einsum("nik,njl,nij,nkl->n", g, g, self.A0, self.A0)

    def willmore_density(self) -> np.ndarray:
        """H^2/4 - D written as the discriminant of gamma^{-1} A."""
        M = np.einsum("nik,nkj->nij", self.gamma_inv, self.A)
        return 0.25 * ((M[:, 0, 0] - M[:, 1, 1]) ** 2 + 4.0 * M[:, 0, 1] * M[:, 1, 0])

    def invariant_residuals(self) -> Dict[str, float]:
        G, nu = self.metric, self.nu
        nn = np.einsum("ni,nij,nj->n", nu, G, nu)
        nt = np.einsum("nai,nij,nj->na", self.tangents, G, nu)
        scale = np.sqrt(np.einsum("nai,nij,naj->n", self.tangents, G, self.tangents))
        h_tr = np.einsum("nij,nij->n", self.gamma_inv, self.A)
        dens = self.H**2 / 4.0 - self.D
        half = self.half_A0_norm2()
        ref = np.maximum(np.abs(self.H) ** 2, 1.0)
        return {
            "unit_normal": float(np.max(np.abs(nn - 1.0))),
            "normal_tangent": float(np.max(np.abs(nt) / scale[:, None])),
            "mean_curvature_trace": float(np.max(np.abs(h_tr - self.H) / np.maximum(np.abs(self.H), 1.0))),
            "density_identity": float(np.max(np.abs(dens - half) / ref)),
        }

    def to_rows(self) -> List[Dict[str, float]]:
        rows = []
        half = self.half_A0_norm2()
        for k in range(self.grid.n_nodes):
            rows.append({
                "node": k,
                "theta": float(self.grid.node_theta[k]),
                "phi": float(self.grid.node_phi[k]),
                "x0": float(self.position[k, 0]),
                "x1": float(self.position[k, 1]),
                "x2": float(self.position[k, 2]),
                "x3": float(self.position[k, 3]),
                "H": float(self.H[k]),
                "A0_norm2": float(2.0 * half[k]),
                "area_el": float(self.area_el[k]),
            })
        return rows


def graph_sphere(
    family: MetricFamily,
    p: S3Point,
    rho: float,
    w: SphereField,
    ode: OdeSettings = DEFAULT_ODE,
) -> ImmersedSphere:
    """Build the graph exp_p((rho + w) Theta) over the grid of w."""
    check_validity(family)
    fan = radial_fan(family, p, rho, w.lmax, ode)
    grid = w.grid
    wv = w.values
    if np.max(np.abs(wv)) >= fan.half_width:
        raise GraphTooLarge(
            f"|w|_inf = {np.max(np.abs(wv)):.4g} not below min(rho, pi - rho)/2 = {fan.half_width:.4g}"
        )
    st = fan.evaluate(rho + wv)
    x, a = st[:, :4], st[:, 4:7]
    b = st[:, 7:16].reshape(-1, 3, 3)
    X = quat_mul(p.array[None, :], x) if family.is_group else x

    w_t, w_p, _, _, _ = w.derivatives()
    th_t, th_p = grid.direction_derivatives
    T = np.stack([
        w_t[:, None] * a + np.einsum("nk,nkj->nj", th_t, b),
        w_p[:, None] * a + np.einsum("nk,nkj->nj", th_p, b),
    ], axis=1)

    G = family.metric_frame(X)
    Ginv = np.linalg.inv(G)
    gamma = np.einsum("nai,nij,nbj->nab", T, G, T)
    gamma_inv = np.linalg.inv(gamma)

    co = np.cross(T[:, 0], T[:, 1])
    nu = np.einsum("nij,nj->ni", Ginv, co)
    nu /= np.sqrt(np.einsum("ni,ni->n", co, nu))[:, None]
    rad_normal = np.einsum("ni,nij,nj->n", a, G, nu)
    flip = rad_normal < 0.0
    nu[flip] *= -1.0
    rad_normal[flip] *= -1.0

    # second derivatives of the position through its band-limited expansion
    C = grid.analyze(X)
    Xd = [grid.basis_t @ C, grid.basis_p @ C]
    Xdd = [[grid.basis_tt @ C, grid.basis_tp @ C], [grid.basis_tp @ C, grid.basis_pp @ C]]
    Xbar = quat_conj(X)
    dT = np.empty((X.shape[0], 2, 2, 3))
    for i in range(2):
        for j in range(2):
            dT[:, i, j] = (quat_mul(quat_conj(Xd[i]), Xd[j]) + quat_mul(Xbar, Xdd[i][j]))[:, 1:]
    gam = frame_connection(family, X)
    V = dT + np.einsum("nlmk,nil,njm->nijk", gam, T, T)
    V = 0.5 * (V + V.transpose(0, 2, 1, 3))

    A = -np.einsum("nijk,nkl,nl->nij", V, G, nu)
    H = np.einsum("nij,nij->n", gamma_inv, A)
    D = np.linalg.det(A) / np.linalg.det(gamma)
    A0 = A - 0.5 * H[:, None, None] * gamma
    A_norm2 = np.einsum("nik,njl,nij,nkl->n", gamma_inv, gamma_inv, A, A)
    christoffel = np.einsum("nkl,nijl->nkij", gamma_inv, np.einsum("nijm,nmq,nlq->nijl", V, G, T))
    area_el = np.sqrt(np.linalg.det(gamma)) / grid.sin_theta

    return ImmersedSphere(
        family=family, center=p, rho=float(rho), w=w, grid=grid, position=X, radial=a,
        tangents=T, metric=G, nu=nu, gamma=gamma, gamma_inv=gamma_inv, A=A, H=H, A0=A0,
        D=D, A_norm2=A_norm2, area_el=area_el, christoffel=christoffel,
        rad_normal=rad_normal, connection=gam,
    )


def surface_gradient(surface: ImmersedSphere, f: SphereField) -> np.ndarray:
    """Frame components of grad_Sigma f = gamma^{ij} f_i Psi_j."""
    f_t, f_p, _, _, _ = f.derivatives()
    df = np.stack([f_t, f_p], axis=1)
    return np.einsum("nij,ni,njk->nk", surface.gamma_inv, df, surface.tangents)


def surface_hessian(surface: ImmersedSphere, f: SphereField) -> np.ndarray:
    """Covariant Hessian (nabla^2 f)_ij = f_ij - Gamma^k_ij f_k on the surface."""
    f_t, f_p, f_tt, f_tp, f_pp = f.derivatives()
    df = np.stack([f_t, f_p], axis=1)
    ddf = np.stack([np.stack([f_tt, f_tp], 1), np.stack([f_tp, f_pp], 1)], 1)
    return ddf - np.einsum("nkij,nk->nij", surface.christoffel, df)


def surface_laplacian(surface: ImmersedSphere, f: SphereField) -> np.ndarray:
    """Nodal Laplace-Beltrami of the induced metric applied to f."""
    return np.einsum("nij,nij->n", surface.gamma_inv, surface_hessian(surface, f))


def pullback_field(
    u_on_sphere: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]],
    surface: ImmersedSphere,
) -> SphereField:
    """w(Theta) = u(exp_p(rho Theta)) from nodal samples or a function on R^4."""
    values = u_on_sphere(surface.position) if callable(u_on_sphere) else np.asarray(u_on_sphere, dtype=float)
    return SphereField.from_values(values, surface.grid.lmax)
