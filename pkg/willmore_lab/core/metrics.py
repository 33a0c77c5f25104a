# Metric families on S^3 = SU(2)
#
# Points are unit quaternions x = (x0, x1, x2, x3). The left-invariant frame
# is E_k(x) = x * e_k with e_1, e_2, e_3 = i, j, k; it is orthonormal for the
# round metric g0 and satisfies [E_i, E_j] = 2 eps_ijk E_k. Every metric is
# handed around as its 3x3 matrix G(x) in this frame.

import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ChartSingularity, ConfigError, NonPositiveDefinite

logger = logging.getLogger(__name__)

GROUP_KINDS = ("round", "berger", "left_invariant", "homothety")
FAMILY_KINDS = GROUP_KINDS + ("round_plus_tensor",)
BUILTIN_TENSORS = ("conformal_constant", "berger_direction", "conformal_linear", "hopf_modulated")

CHART_EXCLUSION = 1e-8
VALIDITY_EIG_FLOOR = 0.1
VALIDITY_SEARCH_CAP = 10.0
VALIDITY_SCAN_STEPS = 200


# Quaternion algebra (vectorised over leading axes)

def quat_mul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    p0, pv = p[..., :1], p[..., 1:]
    q0, qv = q[..., :1], q[..., 1:]
    scalar = p0 * q0 - np.sum(pv * qv, axis=-1, keepdims=True)
    vector = p0 * qv + q0 * pv + np.cross(pv, qv)
    return np.concatenate([scalar, vector], axis=-1)


def quat_conj(q: np.ndarray) -> np.ndarray:
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def pure(v: np.ndarray) -> np.ndarray:
    """Embed R^3 vectors as pure quaternions."""
    return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)


def frame_components(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Components of the R^4 tangent vector v at x in the frame E_k(x)."""
    return quat_mul(quat_conj(x), v)[..., 1:]


def frame_vectors(x: np.ndarray) -> np.ndarray:
    """E_1, E_2, E_3 at x as R^4 vectors, shape (..., 3, 4)."""
    units = np.eye(3)
    return np.stack([quat_mul(x, pure(np.broadcast_to(units[k], x.shape[:-1] + (3,))))
                     for k in range(3)], axis=-2)


def chart_sigma(y: np.ndarray) -> np.ndarray:
    """Inverse stereographic map R^3 -> S^3 scaled so d sigma(0) = (0, I)."""
    r2 = np.sum(y * y, axis=-1, keepdims=True)
    return np.concatenate([4.0 - r2, 4.0 * y], axis=-1) / (4.0 + r2)


def chart_point(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Point x * sigma(y) of the chart centred at x."""
    return quat_mul(x, chart_sigma(y))


def chart_sigma_jacobian(y: np.ndarray) -> np.ndarray:
    """d sigma / d y_a as R^4 vectors, shape (..., 3, 4)."""
    r2 = np.sum(y * y, axis=-1)[..., None, None]
    eye = np.eye(3)
    d0 = -16.0 * y[..., :, None]
    dv = 4.0 * (4.0 + r2) * eye - 8.0 * y[..., :, None] * y[..., None, :]
    return np.concatenate([d0, dv], axis=-1) / (4.0 + r2) ** 2


@dataclass(frozen=True)
class S3Point:
    """Unit quaternion; renormalised on construction."""

    q: Tuple[float, float, float, float]

    def __post_init__(self) -> None:
        arr = np.asarray(self.q, dtype=float).reshape(-1)
        if arr.shape != (4,):
            raise ConfigError(f"an S^3 point needs 4 components, got {arr.shape}")
        n = np.linalg.norm(arr)
        if not np.isfinite(n) or n < 1e-12:
            raise ConfigError(f"cannot normalise point {self.q}")
        object.__setattr__(self, "q", tuple(float(c) for c in arr / n))

    @classmethod
    def identity(cls) -> "S3Point":
        return cls((1.0, 0.0, 0.0, 0.0))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "S3Point":
        return cls(tuple(rng.standard_normal(4)))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.q)

    def antipode(self) -> "S3Point":
        return S3Point(tuple(-c for c in self.q))

    def left_translate(self, other: "S3Point") -> "S3Point":
        return S3Point(tuple(quat_mul(other.array, self.array)))

    def frame(self) -> np.ndarray:
        return frame_vectors(self.array)

    def to_list(self) -> List[float]:
        return list(self.q)


def hurwitz_units() -> List[S3Point]:
    """The 24 vertices of the 24-cell, ordered lexicographically."""
    pts = []
    for k in range(4):
        for s in (1.0, -1.0):
            v = np.zeros(4)
            v[k] = s
            pts.append(tuple(v))
    for signs in np.ndindex(2, 2, 2, 2):
        pts.append(tuple(0.5 * (1.0 - 2.0 * np.array(signs))))
    return [S3Point(p) for p in sorted(pts)]


def validity_design() -> np.ndarray:
    """26-point positivity design: the 24-cell plus two generic points."""
    generic = np.array([[0.3, -0.5, 0.7, 0.4], [-0.2, 0.6, 0.1, -0.75]])
    generic /= np.linalg.norm(generic, axis=1, keepdims=True)
    return np.vstack([np.array([p.q for p in hurwitz_units()]), generic])


@dataclass(frozen=True)
class TensorField:
    """Symmetric 2-tensor h on S^3: a named builtin or a chart coefficient table.

    Table entries are (a, b, coeff, (n0, n1, n2, n3)) and mean
    h_ab(z) = Omega^2 * sum coeff * x^n in the stereographic chart from -1,
    z = 2 Im(x) / (1 + Re x), Omega^2 = 16 / (4 + |z|^2)^2.
    """

    name: str
    scale: float = 1.0
    table: Tuple[Tuple[int, int, float, Tuple[int, int, int, int]], ...] = ()

    @property
    def is_left_invariant(self) -> bool:
        return self.name in ("conformal_constant", "berger_direction")

    def frame_components(self, x: np.ndarray) -> np.ndarray:
        """h(E_k, E_l) at points x, shape (N, 3, 3)."""
        n = x.shape[0]
        eye = np.broadcast_to(np.eye(3), (n, 3, 3))
        if self.name == "conformal_constant":
            return self.scale * eye.copy()
        if self.name == "berger_direction":
            out = np.zeros((n, 3, 3))
            out[:, 0, 0] = self.scale
            return out
        if self.name == "conformal_linear":
            return self.scale * x[:, 1, None, None] * eye
        if self.name == "hopf_modulated":
            out = np.zeros((n, 3, 3))
            out[:, 0, 0] = self.scale * (1.0 + x[:, 2])
            return out
        if self.name == "table":
            return self._table_frame(x)
        raise ConfigError(f"unknown tensor '{self.name}'")

    def _table_frame(self, x: np.ndarray) -> np.ndarray:
        denom = 1.0 + x[:, 0]
        if np.any(denom < CHART_EXCLUSION):
            raise ChartSingularity("coefficient-table tensor is undefined at the point -1")
        z = 2.0 * x[:, 1:] / denom[:, None]
        omega2 = 16.0 / (4.0 + np.sum(z * z, axis=1)) ** 2
        h = np.zeros((x.shape[0], 3, 3))
        for a, b, coeff, powers in self.table:
            mono = coeff * np.prod(x ** np.asarray(powers, dtype=float), axis=1)
            h[:, a, b] += omega2 * mono
            if a != b:
                h[:, b, a] += omega2 * mono
        # J[a, k] = dz_a along E_k(x)
        E = frame_vectors(x)
        dz = 2.0 * E[..., 1:] / denom[:, None, None] - 2.0 * x[:, None, 1:] * E[..., :1] / denom[:, None, None] ** 2
        J = np.swapaxes(dz, -1, -2)
        return self.scale * np.einsum("nak,nab,nbl->nkl", J, h, J)

    def to_document(self) -> Any:
        if self.name == "table":
            return {"table": [[a, b, c, list(p)] for a, b, c, p in self.table], "scale": self.scale}
        if self.scale != 1.0:
            return {"builtin": self.name, "c": self.scale}
        return self.name


@dataclass(frozen=True)
class MetricFamily:
    """A one-parameter family g_eps of metrics on S^3.

    Group kinds are constant in the left-invariant frame:
      round          G = I
      berger         G = diag(1 + eps, 1, 1)
      left_invariant G = I + eps * diag(direction)
      homothety      G = (1 + eps)^2 I
    ``round_plus_tensor`` is G(x) = I + eps * h(x) with h a TensorField.
    """

    kind: str
    epsilon: float = 0.0
    direction: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    tensor: Optional[TensorField] = None
    validity_floor: float = VALIDITY_EIG_FLOOR

    def __post_init__(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise ConfigError(f"unknown family kind '{self.kind}', expected one of {FAMILY_KINDS}")
        if self.kind == "round_plus_tensor" and self.tensor is None:
            raise ConfigError("round_plus_tensor family needs a tensor h")
        if self.kind == "round":
            object.__setattr__(self, "epsilon", 0.0)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    # construction

    @classmethod
    def round(cls) -> "MetricFamily":
        return cls("round")

    @classmethod
    def berger(cls, lam: float) -> "MetricFamily":
        return cls("berger", lam - 1.0, (1.0, 0.0, 0.0))

    @classmethod
    def left_invariant(cls, lambdas: Sequence[float], epsilon: Optional[float] = None) -> "MetricFamily":
        lam = np.asarray(lambdas, dtype=float)
        eps0 = float(np.max(np.abs(lam - 1.0)))
        if eps0 == 0.0:
            return cls("left_invariant", 0.0, (0.0, 0.0, 0.0))
        direction = tuple(float(v) for v in (lam - 1.0) / eps0)
        return cls("left_invariant", eps0 if epsilon is None else epsilon, direction)

    @classmethod
    def homothety(cls, epsilon: float) -> "MetricFamily":
        return cls("homothety", epsilon)

    @classmethod
    def round_plus_tensor(cls, tensor: TensorField, epsilon: float) -> "MetricFamily":
        return cls("round_plus_tensor", epsilon, tensor=tensor)

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "MetricFamily":
        from ..utils.validation import validate_family_document

        validate_family_document(doc)
        kind = doc["kind"]
        if kind == "round":
            return cls.round()
        if kind == "berger":
            if "lambda" in doc:
                if "epsilon" in doc:
                    logger.warning("berger document gives both lambda and epsilon; using lambda")
                return cls.berger(float(doc["lambda"]))
            return cls.berger(1.0 + float(doc["epsilon"]))
        if kind == "left_invariant":
            return cls.left_invariant(doc["lambdas"], doc.get("epsilon"))
        if kind == "homothety":
            if "scale" in doc:
                return cls.homothety(float(doc["scale"]) - 1.0)
            return cls.homothety(float(doc["epsilon"]))
        return cls.round_plus_tensor(tensor_from_document(doc["h"]), float(doc["epsilon"]))

    def to_document(self) -> Dict[str, Any]:
        if self.kind == "round":
            return {"kind": "round"}
        if self.kind == "berger":
            return {"kind": "berger", "lambda": 1.0 + self.epsilon}
        if self.kind == "left_invariant":
            lam = [1.0 + self.epsilon * d for d in self.direction]
            return {"kind": "left_invariant", "lambdas": lam}
        if self.kind == "homothety":
            return {"kind": "homothety", "epsilon": self.epsilon}
        assert self.tensor is not None
        return {"kind": "round_plus_tensor", "h": self.tensor.to_document(), "epsilon": self.epsilon}

    def with_epsilon(self, epsilon: float) -> "MetricFamily":
        if self.kind == "round":
            return self
        return replace(self, epsilon=float(epsilon))

    # evaluation

    @property
    def is_group(self) -> bool:
        """True when g_eps is left-invariant, so left translations are isometries."""
        if self.kind in GROUP_KINDS:
            return True
        return self.tensor is not None and self.tensor.is_left_invariant

    def constant_metric(self) -> np.ndarray:
        """Frame matrix of a left-invariant kind."""
        if self.kind == "round":
            return np.eye(3)
        if self.kind == "berger":
            return np.diag([1.0 + self.epsilon, 1.0, 1.0])
        if self.kind == "left_invariant":
            return np.eye(3) + self.epsilon * np.diag(self.direction)
        if self.kind == "homothety":
            return (1.0 + self.epsilon) ** 2 * np.eye(3)
        if self.is_group:
            assert self.tensor is not None
            return np.eye(3) + self.epsilon * self.tensor.frame_components(np.array([[1.0, 0.0, 0.0, 0.0]]))[0]
        raise ConfigError(f"family kind '{self.kind}' is not left-invariant")

    def metric_frame(self, x: np.ndarray) -> np.ndarray:
        """G at points x of shape (N, 4), returned as (N, 3, 3). No validity check."""
        x = np.atleast_2d(x)
        if self.is_group:
            return np.broadcast_to(self.constant_metric(), (x.shape[0], 3, 3)).copy()
        assert self.tensor is not None
        return np.eye(3) + self.epsilon * self.tensor.frame_components(x)


def tensor_from_document(h: Any) -> TensorField:
    if isinstance(h, str):
        if h not in BUILTIN_TENSORS:
            raise ConfigError(f"unknown builtin tensor '{h}', expected one of {BUILTIN_TENSORS}")
        return TensorField(h)
    if isinstance(h, dict) and "builtin" in h:
        return TensorField(h["builtin"], float(h.get("c", 1.0)))
    if isinstance(h, dict) and "table" in h:
        entries = []
        for row in h["table"]:
            a, b, coeff, powers = row
            entries.append((int(a), int(b), float(coeff), tuple(int(p) for p in powers)))
        return TensorField("table", float(h.get("scale", 1.0)), tuple(entries))
    raise ConfigError(f"cannot interpret tensor document {h!r}")


def _min_eigenvalue(family: MetricFamily, pts: np.ndarray) -> float:
    if family.is_group:
        return float(np.linalg.eigvalsh(family.constant_metric())[0])
    keep = pts[:, 0] > -1.0 + CHART_EXCLUSION if family.tensor and family.tensor.name == "table" else slice(None)
    return float(np.min(np.linalg.eigvalsh(family.metric_frame(pts[keep]))))


@lru_cache(maxsize=128)
def validity_bound(family: MetricFamily, floor: float = VALIDITY_EIG_FLOOR) -> float:
    """Largest |eps| keeping the smallest eigenvalue above floor on the design."""
    if family.kind == "round":
        return np.inf
    pts = validity_design()

    def ok(e: float) -> bool:
        return all(_min_eigenvalue(family.with_epsilon(s * e), pts) > floor for s in (1.0, -1.0))

    # scan outwards first: positivity can fail on an interval and recover (homothety at eps = -1)
    scan = np.linspace(0.0, VALIDITY_SEARCH_CAP, VALIDITY_SCAN_STEPS + 1)
    first_bad = next((i for i in range(1, scan.size) if not ok(float(scan[i]))), None)
    if first_bad is None:
        return VALIDITY_SEARCH_CAP
    lo, hi = float(scan[first_bad - 1]), float(scan[first_bad])
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    logger.debug("validity bound for %s: %.6f", family.kind, lo)
    return lo


def check_validity(family: MetricFamily) -> None:
    """Reject |eps| beyond the bound for the family's own eigenvalue floor."""
    bound = validity_bound(family.with_epsilon(0.0), family.validity_floor)
    if abs(family.epsilon) > bound:
        raise NonPositiveDefinite(
            f"|epsilon| = {abs(family.epsilon):.4g} exceeds the validity bound {bound:.4g}"
        )


def eval_metric(family: MetricFamily, pt: S3Point) -> np.ndarray:
    """Symmetric positive-definite 3x3 matrix of g_eps at pt in the frame E_k(pt)."""
    check_validity(family)
    G = family.metric_frame(pt.array[None, :])[0]
    G = 0.5 * (G + G.T)
    if np.linalg.eigvalsh(G)[0] <= 0.0:
        raise NonPositiveDefinite(f"metric is not positive definite at {pt.q}")
    return G


def metric_sqrt_inv(G: np.ndarray) -> np.ndarray:
    """Symmetric G^{-1/2}, used to turn unit round directions into g-unit ones."""
    vals, vecs = np.linalg.eigh(G)
    return (vecs / np.sqrt(vals)) @ vecs.T
