# Einstein-type diagnostics of a metric family
#
# A family g_eps of perturbations of the round metric falls in one of three
# cases: |Ric0(g_eps)|^2 starts at order eps^2 (Case I), at a higher even
# order eps^k0 (Case II), or g_eps stays homothetic to the round metric
# (Case III). The reports below provide the computable content of that split.

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev

from .curvature import bianchi_residual, curvature_bundle, kulkarni_nomizu
from .errors import ConfigError, FitIllConditioned
from .geodesics import exp_differential, exp_map_inverse_batch
from .metrics import MetricFamily, S3Point, check_validity, metric_sqrt_inv, validity_bound, validity_design

logger = logging.getLogger(__name__)

COEFFICIENT_FLOOR = 1e-10
HOMOTHETY_THRESHOLD = 1e-6
CONDITION_LIMIT = 1e12
MIN_PROBES = 5
DEFAULT_PROBE_RADIUS = 0.2
DEFAULT_PROBE_COUNT = 9
# orders j of Ric0 = sum M_j eps^j resolved above the finite-difference floor
MAX_ORDER = 3
NORMAL_BALL_RADIUS = 0.1


def default_probes(family: MetricFamily, radius: float = DEFAULT_PROBE_RADIUS, n: int = DEFAULT_PROBE_COUNT) -> List[float]:
    """Chebyshev nodes in eps, shrunk inside the validity bound."""
    bound = validity_bound(family.with_epsilon(0.0), family.validity_floor)
    r = min(radius, 0.9 * bound)
    return [float(r * c) for c in np.cos(np.pi * (np.arange(n) + 0.5) / n)]


def probe_points() -> List[S3Point]:
    """Identity plus the two generic points of the positivity design."""
    design = validity_design()
    return [S3Point.identity(), S3Point(tuple(design[-2])), S3Point(tuple(design[-1]))]


@dataclass
class DegeneracyReport:
    """Leading order of |Ric0(g_eps)|^2 in eps at one point.

    ``k0`` is None when no order up to 2 * MAX_ORDER rises above the floor.
    """

    k0: Optional[int]
    coefficient: float
    point: S3Point
    probes: List[float]
    order_norms: List[float]
    condition: float

    @property
    def infinite(self) -> bool:
        return self.k0 is None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k0": "infinite" if self.k0 is None else self.k0,
            "coefficient": self.coefficient,
            "point": self.point.to_list(),
            "probes": self.probes,
            "order_norms": self.order_norms,
            "condition": self.condition,
        }


def degeneracy_order(
    family: MetricFamily,
    pt: S3Point,
    eps_probe: Optional[Sequence[float]] = None,
    floor: float = COEFFICIENT_FLOOR,
    max_order: int = MAX_ORDER,
) -> DegeneracyReport:
    """k0 = 2j for the first j whose eps^j coefficient M_j of the orthonormalised
    Ric0(g_eps) has |M_j|^2 above floor; |M_j|^2 is then the eps^k0 coefficient
    of |Ric0|^2.
    """
    probes = default_probes(family) if eps_probe is None else [float(e) for e in eps_probe]
    if len(probes) < MIN_PROBES:
        raise FitIllConditioned(f"need at least {MIN_PROBES} eps probes, got {len(probes)}")
    scale = max(abs(e) for e in probes)
    if scale == 0.0:
        raise FitIllConditioned("eps probes are all zero")
    rows = []
    for e in probes:
        b = curvature_bundle(family.with_epsilon(e), pt)
        S = metric_sqrt_inv(b.metric)
        rows.append((S @ b.ric0 @ S).reshape(-1))
    t = np.asarray(probes) / scale
    deg = min(len(probes) - 1, 8)
    cond = float(np.linalg.cond(chebyshev.chebvander(t, deg)))
    if not cond < CONDITION_LIMIT:
        raise FitIllConditioned(f"eps fit condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}")
    cheb = chebyshev.chebfit(t, np.array(rows), deg)
    # cheb2poly trims trailing zeros; pad every column back to deg + 1
    mono = np.zeros((deg + 1, cheb.shape[1]))
    for c in range(cheb.shape[1]):
        poly = chebyshev.cheb2poly(cheb[:, c])
        mono[: poly.size, c] = poly
    mono = mono / scale ** np.arange(mono.shape[0])[:, None]
    norms = [float(np.sum(mono[j] ** 2)) for j in range(min(max_order, deg) + 1)]
    k0: Optional[int] = None
    coefficient = 0.0
    for j, value in enumerate(norms):
        if value > floor:
            k0, coefficient = 2 * j, value
            break
    logger.debug("degeneracy at %s: order norms %s", pt.q, norms)
    return DegeneracyReport(k0, coefficient, pt, probes, norms, cond)


@dataclass
class ConstantCurvatureReport:
    """Distance of g_eps from constant sectional curvature on a set of points."""

    residual: float
    scalar_spread: float
    reference_scalar: float
    scalars: List[float]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def constant_curvature_residual(family: MetricFamily, pts: Sequence[S3Point]) -> ConstantCurvatureReport:
    """max over pts of |Riem - (R(p0)/12) g.g| with p0 the first point, plus the spread of R."""
    if len(pts) < 2:
        raise ConfigError("constant_curvature_residual needs at least two points")
    bundles = [curvature_bundle(family, q) for q in pts]
    ref = bundles[0].scalar
    residual = max(
        float(np.max(np.abs(b.riem - ref / 12.0 * kulkarni_nomizu(b.metric, b.metric)))) for b in bundles
    )
    scalars = [float(b.scalar) for b in bundles]
    return ConstantCurvatureReport(residual, float(max(scalars) - min(scalars)), float(ref), scalars)


@dataclass
class NormalCoordinateReport:
    """Fit of g_rs(xi) - delta_rs in g-normal coordinates at q.

    ``quadratic_fit[r, s, i, j]`` is the coefficient of xi^i xi^j in g_rs and
    ``quadratic_predicted`` the value -R_irjs / 3.
    """

    point: S3Point
    order: int
    radius: float
    quadratic_fit: np.ndarray
    quadratic_predicted: np.ndarray
    quadratic_error: float
    fit_residual: float
    inversion_error: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": self.point.to_list(),
            "order": self.order,
            "radius": self.radius,
            "quadratic_fit": self.quadratic_fit.tolist(),
            "quadratic_predicted": self.quadratic_predicted.tolist(),
            "quadratic_error": self.quadratic_error,
            "fit_residual": self.fit_residual,
            "inversion_error": self.inversion_error,
        }


def _monomials(order: int) -> List[tuple]:
    exps = []
    for deg in range(2, order + 1):
        for a in range(deg, -1, -1):
            for b in range(deg - a, -1, -1):
                exps.append((a, b, deg - a - b))
    return exps


def _sample_directions(n_pairs: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((n_pairs, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return np.vstack([d, -d])


def normal_coordinate_expansion(
    family: MetricFamily,
    q: S3Point,
    order: int = 4,
    radius: float = NORMAL_BALL_RADIUS,
    n_pairs: int = 40,
    seed: int = 0,
) -> NormalCoordinateReport:
    """Expand g in normal coordinates at q through the given order.

    Samples lie on a centrally symmetric design so odd and even orders
    decouple; every sample point is recovered through exp-map inversion.
    """
    if not 2 <= order <= 4:
        raise ConfigError(f"order must be 2, 3 or 4, got {order}")
    check_validity(family)
    b = curvature_bundle(family, q)
    S = metric_sqrt_inv(b.metric)
    radii = radius * np.array([0.25, 0.5, 0.75, 1.0])
    xi = np.concatenate([r * _sample_directions(n_pairs, seed) for r in radii])
    ends, _ = exp_differential(family, q, xi @ S)
    v = exp_map_inverse_batch(family, q, ends)
    xi_inv = v @ np.linalg.inv(S)
    inversion_error = float(np.max(np.abs(xi_inv - xi)))
    ends, J = exp_differential(family, q, v)
    G = family.metric_frame(ends)
    JS = np.einsum("nak,kr->nar", J, S)
    g = np.einsum("nar,nab,nbs->nrs", JS, G, JS) - np.eye(3)

    exps = _monomials(order)
    design = np.stack([np.prod(xi_inv ** np.array(e), axis=1) for e in exps], axis=1)
    coef, *_ = np.linalg.lstsq(design, g.reshape(len(xi_inv), 9), rcond=None)
    fit_residual = float(np.max(np.abs(design @ coef - g.reshape(len(xi_inv), 9))))

    quad = np.zeros((3, 3, 3, 3))
    for row, e in enumerate(exps):
        if sum(e) != 2:
            continue
        idx = [k for k in range(3) for _ in range(e[k])]
        i, j = idx
        c = coef[row].reshape(3, 3)
        if i == j:
            quad[:, :, i, i] = c
        else:
            quad[:, :, i, j] = quad[:, :, j, i] = 0.5 * c
    R = np.einsum("abcd,ai,br,cj,ds->irjs", b.riem, S, S, S, S)
    predicted = -np.einsum("irjs->rsij", R + R.transpose(2, 1, 0, 3)) / 6.0
    err = float(np.max(np.abs(quad - predicted)))
    logger.debug("normal coordinates at %s: quadratic error %.3e", q.q, err)
    return NormalCoordinateReport(q, order, radius, quad, predicted, err, fit_residual, inversion_error)


@dataclass
class HomothetyCertificate:
    """r(eps) with g_eps = r^2 g_round when detected, else None with the residuals."""

    r: Optional[float]
    residual: float
    scalar_spread: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def homothety_detect(
    family: MetricFamily, pts: Sequence[S3Point], threshold: float = HOMOTHETY_THRESHOLD
) -> HomothetyCertificate:
    report = constant_curvature_residual(family, pts)
    r = None
    if report.residual < threshold and report.scalar_spread < threshold and report.reference_scalar > 0.0:
        r = float(np.sqrt(6.0 / report.reference_scalar))
    return HomothetyCertificate(r, report.residual, report.scalar_spread)


@dataclass
class Classification:
    """Case I / II / III of a family with the supporting reports."""

    case: str
    k0: Optional[int]
    coefficient: float
    r: Optional[float]
    amplitude: Optional[float]
    residuals: Dict[str, float] = field(default_factory=dict)
    degeneracy: List[DegeneracyReport] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "case": self.case,
            "k0": "infinite" if self.k0 is None else self.k0,
            "coefficient": self.coefficient,
            "r": self.r,
            "amplitude": self.amplitude,
            "residuals": self.residuals,
            "degeneracy": [d.to_dict() for d in self.degeneracy],
        }


def classify_family(
    family: MetricFamily,
    pts: Optional[Sequence[S3Point]] = None,
    eps_probe: Optional[Sequence[float]] = None,
    floor: float = COEFFICIENT_FLOOR,
    threshold: float = HOMOTHETY_THRESHOLD,
) -> Classification:
    """Combine the degeneracy order over pts with the homothety test at the family's eps.

    The family-level k0 is the smallest pointwise order. For finite k0 the
    effective Case I amplitude eps^(k0/2) sqrt(T) is reported; for Case III
    the rescaled constant-curvature residual.
    """
    pts = list(pts) if pts is not None else probe_points()
    reports = [degeneracy_order(family, q, eps_probe, floor) for q in pts]
    finite = [d for d in reports if d.k0 is not None]
    hom = homothety_detect(family, pts, threshold)
    bianchi = max(float(np.max(np.abs(bianchi_residual(family, q)))) for q in pts)
    residuals = {
        "constant_curvature": hom.residual,
        "scalar_spread": hom.scalar_spread,
        "bianchi": bianchi,
    }
    if not finite:
        if hom.r is not None:
            residuals["rescaled_constant_curvature"] = hom.residual / hom.r**2
        return Classification("III", None, 0.0, hom.r, None, residuals, reports)
    lead = min(finite, key=lambda d: (d.k0, -d.coefficient))
    case = "I" if lead.k0 == 2 else "II"
    amplitude = abs(family.epsilon) ** (lead.k0 / 2.0) * np.sqrt(lead.coefficient)
    return Classification(case, lead.k0, lead.coefficient, hom.r, float(amplitude), residuals, reports)
