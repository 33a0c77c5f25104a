# Curvature of metric families on S^3
#
# Conventions (asserted by the tests, used everywhere else):
#   Gamma[i, j, k]    = Gamma^k_ij,  nabla_{E_i} E_j = Gamma^k_ij E_k
#   riem[a, b, c, d]  = g(R(E_a, E_b) E_d, E_c), so the unit round sphere has
#                       riem = g_ac g_bd - g_ad g_bc
#   ric[b, d]         = g^{ac} riem[a, b, c, d]
#   dric[c, a, b]     = (nabla_{E_c} Ric)(E_a, E_b)
#   divergence        (div T)_j = g^{ci} (nabla_c T)_{ij}, no sign,
#                     so dR = 6 div(Ric0) in dimension three.
#
# Left-invariant kinds are evaluated exactly from the structure constants
# [E_i, E_j] = 2 eps_ijk E_k. All other kinds go through finite differences
# of the metric in the chart x * sigma(y) centred at the point, whose
# coordinate frame at y = 0 is the left-invariant frame.

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from .errors import FiniteDifferenceStepUnderflow, NonConvergentDerivative
from .metrics import (
    MetricFamily,
    S3Point,
    chart_point,
    chart_sigma,
    chart_sigma_jacobian,
    check_validity,
    frame_vectors,
    quat_conj,
    quat_mul,
)

logger = logging.getLogger(__name__)

CHART_STEP = 1e-3
CONNECTION_STEP = 1e-3
OUTER_STEP = 1e-2
EPSILON_STEP = 1e-2
STEP_FLOOR = 1e-7
LINEARIZATION_TOL = 1e-5

# Levi-Civita symbol and structure constants c_ij^k = 2 eps_ijk
LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_j, _i, _k] = -1.0
STRUCTURE = 2.0 * LEVI_CIVITA

# 4th-order central first-derivative weights at offsets -2, -1, 1, 2
_D1_OFFSETS = (-2, -1, 1, 2)
_D1_WEIGHTS = (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)
_D2_WEIGHTS = (-1.0 / 12.0, 16.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0)
_D2_CENTER = -30.0 / 12.0


@dataclass
class CurvatureFields:
    """Curvature data at N points, every array with a leading axis of size N."""

    points: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    gamma: np.ndarray
    riem: np.ndarray
    ric: np.ndarray
    scalar: np.ndarray
    ric0: np.ndarray
    ric0_norm2: np.ndarray
    dric: Optional[np.ndarray] = None
    dscalar: Optional[np.ndarray] = None

    def einstein(self) -> np.ndarray:
        """Einstein tensor Ric - (R/2) g."""
        return self.ric - 0.5 * self.scalar[:, None, None] * self.metric

    def einstein_derivative(self) -> np.ndarray:
        """(nabla_c Ein)_ab = (nabla_c Ric)_ab - (1/2) dR_c g_ab."""
        if self.dric is None or self.dscalar is None:
            raise ValueError("curvature derivatives were not requested")
        return self.dric - 0.5 * self.dscalar[:, :, None, None] * self.metric[:, None, :, :]


@dataclass
class CurvatureBundle:
    """All curvature data of g_eps at one point in the frame E_k(pt)."""

    point: S3Point
    frame: np.ndarray
    metric: np.ndarray
    gamma: np.ndarray
    riem: np.ndarray
    ric: np.ndarray
    scalar: float
    ric0: np.ndarray
    ric0_norm2: float
    extras: Dict[str, Any] = field(default_factory=dict)

    def symmetry_residuals(self) -> Dict[str, float]:
        R = self.riem
        ginv = np.linalg.inv(self.metric)
        return {
            "antisym_12": float(np.max(np.abs(R + R.transpose(1, 0, 2, 3)))),
            "antisym_34": float(np.max(np.abs(R + R.transpose(0, 1, 3, 2)))),
            "pair_exchange": float(np.max(np.abs(R - R.transpose(2, 3, 0, 1)))),
            "first_bianchi": float(np.max(np.abs(
                R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)
            ))),
            "trace_ric0": float(abs(np.einsum("ab,ab->", ginv, self.ric0))),
        }

    def ricci_decomposition_residual(self) -> float:
        """|Riem - (R/12) g.g - Ric0.g|, zero in dimension three."""
        g = self.metric
        rest = self.riem - self.scalar / 12.0 * kulkarni_nomizu(g, g) - kulkarni_nomizu(self.ric0, g)
        return float(np.max(np.abs(rest)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": self.point.to_list(),
            "metric": self.metric.tolist(),
            "scalar": float(self.scalar),
            "ric": self.ric.tolist(),
            "ric0": self.ric0.tolist(),
            "ric0_norm2": float(self.ric0_norm2),
            "residuals": self.symmetry_residuals(),
            "ricci_decomposition": self.ricci_decomposition_residual(),
        }


def kulkarni_nomizu(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a.b)_ijkl = a_ik b_jl + a_jl b_ik - a_il b_jk - a_jk b_il (batched)."""
    return (
        np.einsum("...ik,...jl->...ijkl", a, b)
        + np.einsum("...jl,...ik->...ijkl", a, b)
        - np.einsum("...il,...jk->...ijkl", a, b)
        - np.einsum("...jk,...il->...ijkl", a, b)
    )


def _check_step(h: float) -> None:
    if not h >= STEP_FLOOR:
        raise FiniteDifferenceStepUnderflow(f"finite-difference step {h:g} below floor {STEP_FLOOR:g}")


# Connection

def metric_derivative(family: MetricFamily, xs: np.ndarray, h: float = CONNECTION_STEP) -> np.ndarray:
    """dG[n, c, a, b] = E_c(G_ab) at xs, 4th-order central differences."""
    _check_step(h)
    n = xs.shape[0]
    if family.is_group:
        return np.zeros((n, 3, 3, 3))
    dG = np.zeros((n, 3, 3, 3))
    for c in range(3):
        for s, wgt in zip(_D1_OFFSETS, _D1_WEIGHTS):
            y = np.zeros(3)
            y[c] = s * h
            dG[:, c] += wgt * family.metric_frame(chart_point(xs, y[None, :]))
    return dG / h


def _connection_from_parts(G: np.ndarray, dG: np.ndarray) -> np.ndarray:
    C = STRUCTURE
    lower = 0.5 * (
        np.einsum("ijm,nmk->nijk", C, G)
        - np.einsum("jkm,nmi->nijk", C, G)
        + np.einsum("kim,nmj->nijk", C, G)
    )
    lower += 0.5 * (dG + dG.transpose(0, 2, 1, 3) - dG.transpose(0, 2, 3, 1))
    return np.einsum("nkl,nijl->nijk", np.linalg.inv(G), lower)


def frame_connection(family: MetricFamily, xs: np.ndarray, h: float = CONNECTION_STEP) -> np.ndarray:
    """Gamma^k_ij of g_eps in the left-invariant frame at points xs (N, 4)."""
    xs = np.atleast_2d(xs)
    G = family.metric_frame(xs)
    return _connection_from_parts(G, metric_derivative(family, xs, h))


def connection_derivative(
    family: MetricFamily, xs: np.ndarray, dirs: np.ndarray, h: float = CONNECTION_STEP
) -> np.ndarray:
    """E_v(Gamma) at xs for frame directions dirs (N, M, 3); returns (N, M, 3, 3, 3)."""
    n, m = dirs.shape[:2]
    if family.is_group:
        return np.zeros((n, m, 3, 3, 3))
    _check_step(h)
    base = np.repeat(xs, m, axis=0)
    flat = dirs.reshape(n * m, 3)
    out = np.zeros((n * m, 3, 3, 3))
    for s, wgt in zip(_D1_OFFSETS, _D1_WEIGHTS):
        out += wgt * frame_connection(family, chart_point(base, s * h * flat))
    return (out / h).reshape(n, m, 3, 3, 3)


# Curvature

def _group_curvature(family: MetricFamily, xs: np.ndarray, derivatives: bool) -> CurvatureFields:
    n = xs.shape[0]
    G = family.constant_metric()
    gam = _connection_from_parts(G[None], np.zeros((1, 3, 3, 3)))[0]
    rvec = (
        np.einsum("jlm,imn->ijln", gam, gam)
        - np.einsum("ilm,jmn->ijln", gam, gam)
        - np.einsum("ijm,mln->ijln", STRUCTURE, gam)
    )
    riem = np.einsum("ijln,nk->ijkl", rvec, G)
    ginv = np.linalg.inv(G)
    ric = np.einsum("ac,abcd->bd", ginv, riem)
    ric = 0.5 * (ric + ric.T)
    scalar = float(np.einsum("bd,bd->", ginv, ric))
    ric0 = ric - scalar / 3.0 * G
    norm2 = float(np.einsum("ac,bd,ab,cd->", ginv, ginv, ric0, ric0))

    def tile(a: np.ndarray) -> np.ndarray:
        return np.broadcast_to(a, (n,) + a.shape).copy()

    fields = CurvatureFields(
        xs, tile(G), tile(ginv), tile(gam), tile(riem), tile(ric),
        np.full(n, scalar), tile(ric0), np.full(n, norm2),
    )
    if derivatives:
        dric = -np.einsum("cam,mb->cab", gam, ric) - np.einsum("cbm,am->cab", gam, ric)
        fields.dric = tile(dric)
        fields.dscalar = np.zeros((n, 3))
    return fields


def _chart_offsets() -> np.ndarray:
    offsets = [np.zeros(3)]
    for c in range(3):
        for s in _D1_OFFSETS:
            y = np.zeros(3)
            y[c] = s
            offsets.append(y)
    for c in range(3):
        for d in range(c + 1, 3):
            for s in _D1_OFFSETS:
                for t in _D1_OFFSETS:
                    y = np.zeros(3)
                    y[c], y[d] = s, t
                    offsets.append(y)
    return np.array(offsets)


_OFFSETS = _chart_offsets()


def _chart_metric_samples(family: MetricFamily, xs: np.ndarray, h: float) -> np.ndarray:
    """Chart metric g_ab(h * offset) for every point, shape (N, n_offsets, 3, 3)."""
    y = h * _OFFSETS
    sigma = chart_sigma(y)
    # B[o, k, a] = frame component k of d(x sigma)/dy_a, independent of x
    B = np.swapaxes(quat_mul(quat_conj(sigma)[:, None, :], chart_sigma_jacobian(y))[..., 1:], 1, 2)
    n, m = xs.shape[0], y.shape[0]
    pts = quat_mul(np.repeat(xs, m, axis=0), np.tile(sigma, (n, 1)))
    G = family.metric_frame(pts).reshape(n, m, 3, 3)
    return np.einsum("oka,nokl,olb->noab", B, G, B)


def _chart_derivatives(family: MetricFamily, xs: np.ndarray, h: float):
    g = _chart_metric_samples(family, xs, h)
    idx = {tuple(o): i for i, o in enumerate(_OFFSETS.astype(int))}
    n = xs.shape[0]
    d1 = np.zeros((n, 3, 3, 3))
    d2 = np.zeros((n, 3, 3, 3, 3))
    center = g[:, 0]
    for c in range(3):
        pure = _D2_CENTER * center
        for s, w1, w2 in zip(_D1_OFFSETS, _D1_WEIGHTS, _D2_WEIGHTS):
            y = [0, 0, 0]
            y[c] = s
            sample = g[:, idx[tuple(y)]]
            d1[..., c] += w1 * sample
            pure = pure + w2 * sample
        d2[..., c, c] = pure
    for c in range(3):
        for d in range(c + 1, 3):
            mixed = np.zeros((n, 3, 3))
            for s, ws in zip(_D1_OFFSETS, _D1_WEIGHTS):
                for t, wt in zip(_D1_OFFSETS, _D1_WEIGHTS):
                    y = [0, 0, 0]
                    y[c], y[d] = s, t
                    mixed += ws * wt * g[:, idx[tuple(y)]]
            d2[..., c, d] = mixed
            d2[..., d, c] = mixed
    return center, d1 / h, d2 / h**2


def _chart_curvature(family: MetricFamily, xs: np.ndarray, h: float) -> CurvatureFields:
    _check_step(h / 2.0)
    g, d1a, d2a = _chart_derivatives(family, xs, h)
    _, d1b, d2b = _chart_derivatives(family, xs, h / 2.0)
    d1 = (16.0 * d1b - d1a) / 15.0
    d2 = (16.0 * d2b - d2a) / 15.0

    ginv = np.linalg.inv(g)
    # lower[n, f, b, c] = 1/2 (g_fb,c + g_fc,b - g_bc,f)
    lower = 0.5 * (d1 + d1.transpose(0, 1, 3, 2) - d1.transpose(0, 3, 1, 2))
    chris = np.einsum("nef,nfbc->nebc", ginv, lower)
    riem = 0.5 * (
        np.einsum("nadbc->nabcd", d2)
        + np.einsum("nbcad->nabcd", d2)
        - np.einsum("nacbd->nabcd", d2)
        - np.einsum("nbdac->nabcd", d2)
    )
    riem += np.einsum("nfbc,nfad->nabcd", lower, chris) - np.einsum("nfbd,nfac->nabcd", lower, chris)
    ric = np.einsum("nac,nabcd->nbd", ginv, riem)
    ric = 0.5 * (ric + ric.transpose(0, 2, 1))
    scalar = np.einsum("nbd,nbd->n", ginv, ric)
    ric0 = ric - scalar[:, None, None] / 3.0 * g
    norm2 = np.einsum("nac,nbd,nab,ncd->n", ginv, ginv, ric0, ric0)
    gam = frame_connection(family, xs)
    return CurvatureFields(xs, g, ginv, gam, riem, ric, scalar, ric0, norm2)


def _outer_derivatives(family: MetricFamily, xs: np.ndarray, h: float, h_chart: float):
    """E_c(Ric_ab) and E_c(R) by 4th-order differences along the frame."""
    _check_step(h)
    n = xs.shape[0]
    d_ric = np.zeros((n, 3, 3, 3))
    d_scalar = np.zeros((n, 3))
    for c in range(3):
        for s, wgt in zip(_D1_OFFSETS, _D1_WEIGHTS):
            y = np.zeros(3)
            y[c] = s * h
            f = _chart_curvature(family, chart_point(xs, y[None, :]), h_chart)
            d_ric[:, c] += wgt * f.ric
            d_scalar[:, c] += wgt * f.scalar
    return d_ric / h, d_scalar / h


def curvature_fields(
    family: MetricFamily,
    xs: np.ndarray,
    derivatives: bool = False,
    h_chart: float = CHART_STEP,
    h_outer: float = OUTER_STEP,
) -> CurvatureFields:
    """Vectorised curvature of g_eps at points xs of shape (N, 4)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if family.is_group:
        return _group_curvature(family, xs, derivatives)
    fields = _chart_curvature(family, xs, h_chart)
    if derivatives:
        e_ric, e_scalar = _outer_derivatives(family, xs, h_outer, h_chart)
        gam, ric = fields.gamma, fields.ric
        fields.dric = (
            e_ric
            - np.einsum("ncam,nmb->ncab", gam, ric)
            - np.einsum("ncbm,nam->ncab", gam, ric)
        )
        fields.dscalar = e_scalar
    return fields


def curvature_bundle(family: MetricFamily, pt: S3Point, h_chart: float = CHART_STEP) -> CurvatureBundle:
    """Christoffel symbols, Riemann, Ricci, scalar and traceless Ricci at pt."""
    check_validity(family)
    f = curvature_fields(family, pt.array[None, :], h_chart=h_chart)
    return CurvatureBundle(
        point=pt,
        frame=frame_vectors(pt.array),
        metric=f.metric[0],
        gamma=f.gamma[0],
        riem=f.riem[0],
        ric=f.ric[0],
        scalar=float(f.scalar[0]),
        ric0=f.ric0[0],
        ric0_norm2=float(f.ric0_norm2[0]),
    )


@dataclass
class RicciLinearization:
    """First epsilon-derivative of Ric0 at eps = 0 and T2 = |D|^2."""

    tensor: np.ndarray
    t2: float
    richardson_gap: float


def traceless_ricci_linearization(
    family: MetricFamily, pt: S3Point, step: float = EPSILON_STEP, tol: float = LINEARIZATION_TOL
) -> RicciLinearization:
    """D = d/d eps Ric0(g0 + eps h) at eps = 0 by central differences with Richardson."""
    _check_step(step / 2.0)

    def ric0(e: float) -> np.ndarray:
        return curvature_bundle(family.with_epsilon(e), pt).ric0

    def central(eta: float) -> np.ndarray:
        return (ric0(eta) - ric0(-eta)) / (2.0 * eta)

    coarse, fine = central(step), central(step / 2.0)
    D = (4.0 * fine - coarse) / 3.0
    gap = float(np.max(np.abs(fine - coarse)))
    # levels differ by O(step^2) for a smooth family
    scale = max(1.0, float(np.max(np.abs(D))))
    if gap > max(tol, step**2) * 100.0 * scale:
        raise NonConvergentDerivative(
            f"Richardson levels disagree by {gap:.3e} at step {step:g}"
        )
    return RicciLinearization(D, float(np.sum(D * D)), gap)


def bianchi_residual(
    family: MetricFamily, pt: S3Point, h_outer: float = OUTER_STEP, h_chart: float = CHART_STEP
) -> np.ndarray:
    """dR - 6 div(Ric0) at pt; Ric and R are differenced along the frame."""
    check_validity(family)
    xs = pt.array[None, :]
    base = curvature_fields(family, xs, h_chart=h_chart)
    if family.is_group:
        e_ric = np.zeros((1, 3, 3, 3))
        e_scalar = np.zeros((1, 3))
    else:
        e_ric, e_scalar = _outer_derivatives(family, xs, h_outer, h_chart)
    gam, ric, ginv, G = base.gamma, base.ric, base.metric_inv, base.metric
    dric = e_ric - np.einsum("ncam,nmb->ncab", gam, ric) - np.einsum("ncbm,nam->ncab", gam, ric)
    dric0 = dric - e_scalar[:, :, None, None] / 3.0 * G[:, None, :, :]
    div_ric0 = np.einsum("nci,ncij->nj", ginv, dric0)
    return (e_scalar - 6.0 * div_ric0)[0]
