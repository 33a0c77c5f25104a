# Conformal Willmore energy of graph spheres and its variations
#
# I(S) = integral of (H^2/4 - D) d mu = 1/2 integral of |A0|^2 d mu, and
# W(S) = integral of (H^2/4 + 1) d mu. Gradients are L2(S^2) representations
# in the coefficient space of w: gradient.coeffs[k] = dI / dc_k.

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .errors import ConfigError, StepTooLarge
from .geodesics import (
    DEFAULT_ODE,
    ImmersedSphere,
    OdeSettings,
    graph_sphere,
    surface_gradient,
    surface_hessian,
    surface_laplacian,
)
from .metrics import MetricFamily, S3Point
from .spectral import SphereField, n_coeffs

logger = logging.getLogger(__name__)

GRADIENT_MODES = ("analytic", "fd")
FD_COEFF_STEP = 1e-4
HESSIAN_STEP = 1e-2


@dataclass
class EnergyReport:
    """Integrated energies of one sphere.

    Attributes:
        I: conformal Willmore value, integral of H^2/4 - D.
        W: integral of H^2/4 + 1.
        area: total area.
        half_A0_sq: 1/2 integral of |A0|^2, equal to I.
        gauss_defect: I - (integral of (H^2/4 - Ein(nu, nu)) - 4 pi), zero by Gauss-Bonnet.
    """

    I: float
    W: float
    area: float
    half_A0_sq: float
    gauss_defect: float

    def consistency(self) -> float:
        """Relative gap between the two expressions of I."""
        return abs(self.I - self.half_A0_sq) / max(abs(self.half_A0_sq), 1e-12)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def conformal_energy(surface: ImmersedSphere) -> float:
    """I alone, without the ambient-curvature fields energy() also reports."""
    return surface.integrate(surface.willmore_density())


def energy(surface: ImmersedSphere) -> EnergyReport:
    I_val = conformal_energy(surface)
    half = surface.integrate(surface.half_A0_norm2())
    H2 = surface.H**2 / 4.0
    ein_nn = np.einsum("ni,nij,nj->n", surface.nu, surface.ambient().einstein(), surface.nu)
    defect = I_val - (surface.integrate(H2 - ein_nn) - 4.0 * np.pi)
    return EnergyReport(
        I=I_val,
        W=surface.integrate(H2 + 1.0),
        area=surface.area(),
        half_A0_sq=half,
        gauss_defect=float(defect),
    )


def _jacobi_nodal(surface: ImmersedSphere, u: SphereField) -> np.ndarray:
    potential = surface.ricci_normal() + surface.A_norm2
    return -surface_laplacian(surface, u) - potential * u.values


def jacobi_apply(surface: ImmersedSphere, u: SphereField) -> SphereField:
    """L u = -Delta_gamma u - (Ric(nu, nu) + |A|^2) u."""
    if u.lmax != surface.grid.lmax:
        raise ConfigError(f"field band limit {u.lmax} differs from the surface grid {surface.grid.lmax}")
    return SphereField.from_values(_jacobi_nodal(surface, u), u.lmax)


def first_variation_density(surface: ImmersedSphere) -> np.ndarray:
    """Nodal I' with dI[u nu] = integral of I' u d mu.

    I' = LH/2 + H^3/4 - (nabla_nu Ein)(nu, nu) - 2 gamma^{ij} (nabla_{Psi_i} Ein)(Psi_j, nu)
         - 2 A^{jk} Ein(Psi_j, Psi_k) + H Ein(nu, nu)
    """
    H = surface.H
    curv = surface.ambient(derivatives=True)
    ein = curv.einstein()
    dein = curv.einstein_derivative()
    nu, T, ginv = surface.nu, surface.tangents, surface.gamma_inv
    LH = _jacobi_nodal(surface, SphereField.from_values(H, surface.grid.lmax))
    a_up = np.einsum("nia,njb,nab->nij", ginv, ginv, surface.A)
    d_nnn = np.einsum("nc,na,nb,ncab->n", nu, nu, nu, dein)
    d_tan = np.einsum("nij,nic,nja,nb,ncab->n", ginv, T, T, nu, dein)
    ein_tt = np.einsum("nia,nab,njb->nij", T, ein, T)
    ein_nn = np.einsum("na,nab,nb->n", nu, ein, nu)
    return (
        0.5 * LH + H**3 / 4.0 - d_nnn - 2.0 * d_tan
        - 2.0 * np.einsum("nij,nij->n", a_up, ein_tt) + H * ein_nn
    )


def analytic_gradient(surface: ImmersedSphere) -> SphereField:
    """Coefficient gradient from the first-variation density.

    A coefficient move dw displaces the surface by dw * a, whose normal part is
    dw * g(a, nu); the pairing over Sigma is pulled back with area_el.
    """
    dens = first_variation_density(surface) * surface.rad_normal * surface.area_el
    return SphereField.from_values(dens, surface.grid.lmax)


def fd_gradient(
    family: MetricFamily,
    p: S3Point,
    rho: float,
    w: SphereField,
    step: float = FD_COEFF_STEP,
    coefficients: Optional[Sequence[int]] = None,
    ode: OdeSettings = DEFAULT_ODE,
) -> SphereField:
    """Central differences of I in each coefficient with one Richardson level."""
    idx = range(n_coeffs(w.lmax)) if coefficients is None else coefficients
    grad = np.zeros(n_coeffs(w.lmax))

    def central(k: int, h: float) -> float:
        e = SphereField.zeros(w.lmax)
        e.coeffs[k] = h
        plus = conformal_energy(graph_sphere(family, p, rho, w + e, ode))
        minus = conformal_energy(graph_sphere(family, p, rho, w - e, ode))
        return (plus - minus) / (2.0 * h)

    for k in idx:
        grad[k] = (4.0 * central(k, step / 2.0) - central(k, step)) / 3.0
    return SphereField(w.lmax, grad)


def willmore_gradient(
    family: MetricFamily,
    p: S3Point,
    rho: float,
    w: SphereField,
    mode: str = "analytic",
    step: float = FD_COEFF_STEP,
    ode: OdeSettings = DEFAULT_ODE,
) -> SphereField:
    """L2(S^2) representation of dI at the graph sphere S_{p,rho}(w)."""
    if mode not in GRADIENT_MODES:
        raise ConfigError(f"unknown gradient mode '{mode}', expected one of {GRADIENT_MODES}")
    if mode == "fd":
        return fd_gradient(family, p, rho, w, step, ode=ode)
    return analytic_gradient(graph_sphere(family, p, rho, w, ode))


# Variation identities

@dataclass
class VariationReport:
    """Sup-norm residuals of the first-variation identities for u nu."""

    ds: float
    residuals: Dict[str, float]
    area_rate: float
    area_rate_predicted: float
    richardson_gaps: Dict[str, float] = field(default_factory=dict)

    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _fields_of(surface: ImmersedSphere, z: SphereField) -> Dict[str, np.ndarray]:
    return {
        "area_element": np.log(surface.area_el),
        "mean_curvature": surface.H,
        "ricci_normal": surface.ricci_normal(),
        "second_form_norm": surface.A_norm2,
        "laplacian": surface_laplacian(surface, z),
    }


def _tangential_rate(surface: ImmersedSphere, f: np.ndarray, v: SphereField) -> np.ndarray:
    """df(V^T) for the graph velocity V = v a, from the surface gradient of f."""
    grad = surface_gradient(surface, SphereField.from_values(f, surface.grid.lmax))
    return v.values * np.einsum("ni,nij,nj->n", grad, surface.metric, surface.radial)


def _divergence_of_velocity(surface: ImmersedSphere, v: SphereField) -> np.ndarray:
    """div_Sigma of V = v a."""
    grid = surface.grid
    a = surface.radial
    C = grid.analyze(a)
    da = np.stack([grid.basis_t @ C, grid.basis_p @ C], axis=1)
    cov = da + np.einsum("nlmk,nil,nm->nik", surface.connection, surface.tangents, a)
    v_t, v_p, _, _, _ = v.derivatives()
    dv = np.stack([v_t, v_p], axis=1)
    a_t = np.einsum("nm,nmq,njq->nj", a, surface.metric, surface.tangents)
    cov_t = np.einsum("nim,nmq,njq->nij", cov, surface.metric, surface.tangents)
    return np.einsum("nij,ni,nj->n", surface.gamma_inv, dv, a_t) + v.values * np.einsum(
        "nij,nij->n", surface.gamma_inv, cov_t
    )


def variation_identity_residuals(
    surface: ImmersedSphere,
    u: SphereField,
    ds: float = 1e-3,
    z: Optional[SphereField] = None,
    noise_ratio: float = 0.1,
) -> VariationReport:
    """Compare finite differences along the normal variation u nu with the closed forms.

    The variation is realised by graphs w + s v with v = u / g(a, nu); the
    tangential part of v a is accounted for by transport terms.
    """
    lmax = surface.grid.lmax
    if u.lmax != lmax:
        raise ConfigError(f"field band limit {u.lmax} differs from the surface grid {lmax}")
    z = SphereField.harmonic(lmax, 2, 1) if z is None else z
    v = SphereField.from_values(u.values / surface.rad_normal, lmax)
    u_eff = SphereField.from_values(v.values * surface.rad_normal, lmax)
    uu = u_eff.values

    def sampled(s: float) -> Dict[str, np.ndarray]:
        return _fields_of(graph_sphere(surface.family, surface.center, surface.rho, surface.w + v * s), z)

    levels = {h: (sampled(h), sampled(-h)) for h in (ds, ds / 2.0)}
    rates: Dict[str, np.ndarray] = {}
    gaps: Dict[str, float] = {}
    for name in levels[ds][0]:
        coarse = (levels[ds][0][name] - levels[ds][1][name]) / (2.0 * ds)
        fine = (levels[ds / 2.0][0][name] - levels[ds / 2.0][1][name]) / ds
        rates[name] = (4.0 * fine - coarse) / 3.0
        gaps[name] = float(np.max(np.abs(fine - coarse)))
        scale = max(1.0, float(np.max(np.abs(rates[name]))))
        if gaps[name] > noise_ratio * scale:
            raise StepTooLarge(f"{name}: Richardson levels differ by {gaps[name]:.3e} at ds={ds:g}")

    base = _fields_of(surface, z)
    H, nu, G = surface.H, surface.nu, surface.metric
    curv = surface.ambient(derivatives=True)
    grad_u = surface_gradient(surface, u_eff)
    hess_u = surface_hessian(surface, u_eff)
    a_up = np.einsum("nia,njb,nab->nij", surface.gamma_inv, surface.gamma_inv, surface.A)
    M = np.einsum("nik,nkj->nij", surface.gamma_inv, surface.A)
    trA3 = np.einsum("nij,njk,nki->n", M, M, M)
    riem_n = np.einsum("nabcd,na,nib,nc,njd->nij", curv.riem, nu, surface.tangents, nu, surface.tangents)

    predicted = {
        "mean_curvature": _jacobi_nodal(surface, u_eff),
        "ricci_normal": uu * np.einsum("nc,na,nb,ncab->n", nu, nu, nu, curv.dric)
        - 2.0 * np.einsum("na,nab,nb->n", grad_u, curv.ric, nu),
        "second_form_norm": -2.0 * uu * trA3
        - 2.0 * np.einsum("nij,nij->n", a_up, hess_u)
        - 2.0 * uu * np.einsum("nij,nij->n", a_up, riem_n),
    }
    # tangential transport of the node-attached scalars
    for name in ("mean_curvature", "ricci_normal", "second_form_norm"):
        predicted[name] = predicted[name] + _tangential_rate(surface, base[name], v)
    # d log(area_el) / ds = u H + div V^T = div_Sigma(v a)
    predicted["area_element"] = _divergence_of_velocity(surface, v)

    grad_z = surface_gradient(surface, z)
    grad_H = surface_gradient(surface, SphereField.from_values(H, lmax))
    A_gz_gu = np.einsum("nij,ni,nj->n", surface.A, _tangent_coords(surface, grad_u), _tangent_coords(surface, grad_z))
    hess_z = surface_hessian(surface, z)
    commutator = (
        H * _g(G, grad_u, grad_z)
        - uu * _g(G, grad_z, grad_H)
        - 2.0 * A_gz_gu
        - 2.0 * uu * np.einsum("na,nab,nb->n", grad_z, curv.ric, nu)
        - 2.0 * uu * np.einsum("nij,nij->n", a_up, hess_z)
    )
    # reparametrisation along V^T acts on Delta z as a Lie derivative
    lap_z = base["laplacian"]
    drift_z = SphereField.from_values(_tangential_rate(surface, z.values, v), lmax)
    predicted["laplacian"] = (
        commutator + _tangential_rate(surface, lap_z, v) - surface_laplacian(surface, drift_z)
    )

    residuals = {name: float(np.max(np.abs(rates[name] - predicted[name]))) for name in predicted}
    area_rate = surface.grid.integrate(rates["area_element"] * surface.area_el)
    area_pred = surface.integrate(uu * H)
    residuals["area_integrated"] = abs(area_rate - area_pred)
    logger.debug("variation residuals: %s", residuals)
    return VariationReport(ds, residuals, float(area_rate), float(area_pred), gaps)


def _g(G: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("ni,nij,nj->n", x, G, y)


def _tangent_coords(surface: ImmersedSphere, vec: np.ndarray) -> np.ndarray:
    """Coordinates c^i of a tangent frame vector in the basis Psi_i."""
    return np.einsum("nij,njk,nkl,nl->ni", surface.gamma_inv, surface.tangents, surface.metric, vec)


# Second variation

def hessian_spectrum(
    family: MetricFamily,
    p: S3Point,
    rho: float,
    ls: Sequence[int] = (0, 1, 2, 3),
    lmax: int = 16,
    step: float = HESSIAN_STEP,
    ode: OdeSettings = DEFAULT_ODE,
) -> List[Dict[str, float]]:
    """Five-point second derivative of t -> I(S_{p,rho}(t Y_l0)) against the round value.

    The round prediction is l(l+1)(l(l+1) - 2) / (2 sin^2 rho).
    """
    rows = []
    for l in ls:
        u = SphereField.harmonic(lmax, int(l), 0)
        vals = [conformal_energy(graph_sphere(family, p, rho, u * (k * step), ode)) for k in (-2, -1, 0, 1, 2)]
        second = (-vals[0] + 16.0 * vals[1] - 30.0 * vals[2] + 16.0 * vals[3] - vals[4]) / (12.0 * step**2)
        lam = l * (l + 1)
        predicted = lam * (lam - 2) / (2.0 * np.sin(rho) ** 2)
        rows.append({
            "l": int(l),
            "fd": float(second),
            "predicted": float(predicted),
            "abs_error": float(abs(second - predicted)),
            "rel_error": float(abs(second - predicted) / predicted) if predicted else float("nan"),
        })
    return rows
