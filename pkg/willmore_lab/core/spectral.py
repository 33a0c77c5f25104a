# Spectral layer on S^2 - real spherical harmonics on a Gauss-Legendre grid
#
# Coefficient ordering (shared by every module and every file on disk):
#     k = l*l + l + m,   0 <= l <= lmax,  -l <= m <= l
# Real basis, L2(S^2)-orthonormal:
#     m > 0 : sqrt(2) P_l^m(theta) cos(m phi)
#     m = 0 :         P_l^0(theta)
#     m < 0 : sqrt(2) P_l^|m|(theta) sin(|m| phi)
# with P_l^m the normalised associated Legendre function without the
# Condon-Shortley phase. With this choice Y_{1,1}, Y_{1,-1}, Y_{1,0} are
# positive multiples of the coordinate functions x, y, z.

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError, KernelComponentPresent

logger = logging.getLogger(__name__)

try:  # scipy >= 1.15
    from scipy.special import sph_harm_y as _sph_harm_y

    def _legendre_theta(l: int, m: int, theta: np.ndarray) -> np.ndarray:
        return np.real(_sph_harm_y(l, m, theta, 0.0))

except ImportError:  # pragma: no cover - older scipy
    from scipy.special import sph_harm as _sph_harm

    def _legendre_theta(l: int, m: int, theta: np.ndarray) -> np.ndarray:
        return np.real(_sph_harm(m, l, 0.0, theta))


MIN_LMAX = 8
KERNEL_SIZE = 4


def lm_index(l: int, m: int) -> int:
    """Flat coefficient index of (l, m)."""
    if abs(m) > l:
        raise ConfigError(f"|m| must not exceed l, got l={l}, m={m}")
    return l * l + l + m


def n_coeffs(lmax: int) -> int:
    return (lmax + 1) ** 2


def degrees(lmax: int) -> np.ndarray:
    """Degree l of every flat coefficient index."""
    return np.concatenate([np.full(2 * l + 1, l) for l in range(lmax + 1)])


def orders(lmax: int) -> np.ndarray:
    """Order m of every flat coefficient index."""
    return np.concatenate([np.arange(-l, l + 1) for l in range(lmax + 1)])


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Gauss-Legendre colatitudes x uniform longitudes with SH basis matrices.

    Nodes are flattened latitude-major: node ``i * nlon + j`` sits at
    ``(theta[i], phi[j])``. Every basis matrix has shape (n_nodes, n_coeffs).
    """

    lmax: int
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    basis: np.ndarray
    basis_t: np.ndarray
    basis_p: np.ndarray
    basis_tt: np.ndarray
    basis_tp: np.ndarray
    basis_pp: np.ndarray

    @property
    def nlat(self) -> int:
        return self.theta.size

    @property
    def nlon(self) -> int:
        return self.phi.size

    @property
    def n_nodes(self) -> int:
        return self.nlat * self.nlon

    @property
    def node_theta(self) -> np.ndarray:
        return np.repeat(self.theta, self.nlon)

    @property
    def node_phi(self) -> np.ndarray:
        return np.tile(self.phi, self.nlat)

    @property
    def sin_theta(self) -> np.ndarray:
        return np.sin(self.node_theta)

    @property
    def directions(self) -> np.ndarray:
        """Unit vectors Theta in R^3 at every node, shape (n_nodes, 3)."""
        t, p = self.node_theta, self.node_phi
        return np.stack(
            [np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1
        )

    @property
    def direction_derivatives(self) -> Tuple[np.ndarray, np.ndarray]:
        """d Theta / d theta and d Theta / d phi at every node."""
        t, p = self.node_theta, self.node_phi
        d_t = np.stack(
            [np.cos(t) * np.cos(p), np.cos(t) * np.sin(p), -np.sin(t)], axis=-1
        )
        d_p = np.stack(
            [-np.sin(t) * np.sin(p), np.sin(t) * np.cos(p), np.zeros_like(t)],
            axis=-1,
        )
        return d_t, d_p

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return self.basis @ coeffs

    def analyze(self, values: np.ndarray) -> np.ndarray:
        if values.ndim == 1:
            return self.basis.T @ (self.weights * values)
        return self.basis.T @ (self.weights[:, None] * values)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    def derivatives(self, coeffs: np.ndarray) -> Tuple[np.ndarray, ...]:
        """Nodal (f_t, f_p, f_tt, f_tp, f_pp) of a band-limited field."""
        return (
            self.basis_t @ coeffs,
            self.basis_p @ coeffs,
            self.basis_tt @ coeffs,
            self.basis_tp @ coeffs,
            self.basis_pp @ coeffs,
        )


def _legendre_table(lmax: int, theta: np.ndarray) -> Tuple[np.ndarray, ...]:
    # P[l, m, i] and its first two theta-derivatives for m >= 0
    nlat = theta.size
    P = np.zeros((lmax + 1, lmax + 1, nlat))
    for l in range(lmax + 1):
        for m in range(l + 1):
            P[l, m] = (-1.0) ** m * _legendre_theta(l, m, theta)

    sin_t, cos_t = np.sin(theta), np.cos(theta)
    dP = np.zeros_like(P)
    ddP = np.zeros_like(P)
    for l in range(lmax + 1):
        for m in range(l + 1):
            lower = P[l - 1, m] if l >= 1 and m <= l - 1 else 0.0
            c = np.sqrt((2 * l + 1) * (l - m) * (l + m) / (2 * l - 1)) if l else 0.0
            dP[l, m] = (l * cos_t * P[l, m] - c * lower) / sin_t
            ddP[l, m] = (
                -cos_t / sin_t * dP[l, m]
                - (l * (l + 1) - m * m / sin_t**2) * P[l, m]
            )
    return P, dP, ddP


@lru_cache(maxsize=8)
def sphere_grid(lmax: int) -> SphereGrid:
    """Build (and cache) the grid and basis matrices for band limit lmax."""
    if int(lmax) != lmax or lmax < MIN_LMAX:
        raise ConfigError(f"lmax must be an integer >= {MIN_LMAX}, got {lmax}")
    lmax = int(lmax)
    nlat, nlon = lmax + 1, 2 * lmax + 2
    x, w_lat = leggauss(nlat)
    theta = np.arccos(x)[::-1]
    w_lat = w_lat[::-1]
    phi = 2.0 * np.pi * np.arange(nlon) / nlon
    weights = np.repeat(w_lat, nlon) * (2.0 * np.pi / nlon)

    P, dP, ddP = _legendre_table(lmax, theta)
    node_phi = np.tile(phi, nlat)
    lat = np.repeat(np.arange(nlat), nlon)

    K = n_coeffs(lmax)
    n = nlat * nlon
    B, Bt, Bp, Btt, Btp, Bpp = (np.zeros((n, K)) for _ in range(6))
    root2 = np.sqrt(2.0)
    for l in range(lmax + 1):
        for m in range(-l, l + 1):
            k = lm_index(l, m)
            mu = abs(m)
            p, dp, ddp = P[l, mu][lat], dP[l, mu][lat], ddP[l, mu][lat]
            if m == 0:
                trig, dtrig = np.ones(n), np.zeros(n)
                scale = 1.0
            elif m > 0:
                trig, dtrig = np.cos(mu * node_phi), -mu * np.sin(mu * node_phi)
                scale = root2
            else:
                trig, dtrig = np.sin(mu * node_phi), mu * np.cos(mu * node_phi)
                scale = root2
            B[:, k] = scale * p * trig
            Bt[:, k] = scale * dp * trig
            Bp[:, k] = scale * p * dtrig
            Btt[:, k] = scale * ddp * trig
            Btp[:, k] = scale * dp * dtrig
            Bpp[:, k] = -(mu**2) * B[:, k]

    logger.debug("built sphere grid lmax=%d (%d nodes)", lmax, n)
    return SphereGrid(lmax, theta, phi, weights, B, Bt, Bp, Btt, Btp, Bpp)


@dataclass
class SphereField:
    """Band-limited real function on S^2 stored by its SH coefficients."""

    lmax: int
    coeffs: np.ndarray
    _values: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (n_coeffs(self.lmax),):
            raise ConfigError(
                f"expected {n_coeffs(self.lmax)} coefficients for lmax={self.lmax}, "
                f"got shape {self.coeffs.shape}"
            )

    # construction

    @classmethod
    def zeros(cls, lmax: int) -> "SphereField":
        return cls(lmax, np.zeros(n_coeffs(lmax)))

    @classmethod
    def harmonic(cls, lmax: int, l: int, m: int, amplitude: float = 1.0) -> "SphereField":
        c = np.zeros(n_coeffs(lmax))
        c[lm_index(l, m)] = amplitude
        return cls(lmax, c)

    @classmethod
    def from_values(cls, values: np.ndarray, lmax: int) -> "SphereField":
        """Analysis of nodal samples (exact for band-limited data)."""
        grid = sphere_grid(lmax)
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_nodes,):
            raise ConfigError(
                f"expected {grid.n_nodes} nodal values, got shape {values.shape}"
            )
        return cls(lmax, grid.analyze(values))

    @classmethod
    def from_function(
        cls, func: Callable[[np.ndarray], np.ndarray], lmax: int
    ) -> "SphereField":
        """Sample func(directions) on the grid and analyse."""
        grid = sphere_grid(lmax)
        return cls.from_values(func(grid.directions), lmax)

    @classmethod
    def random(
        cls, lmax: int, rng: np.random.Generator, scale: float = 1.0, l_cut: Optional[int] = None
    ) -> "SphereField":
        c = scale * rng.standard_normal(n_coeffs(lmax))
        if l_cut is not None:
            c[degrees(lmax) > l_cut] = 0.0
        return cls(lmax, c)

    # views

    @property
    def grid(self) -> SphereGrid:
        return sphere_grid(self.lmax)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = self.grid.synthesize(self.coeffs)
        return self._values

    def derivatives(self) -> Tuple[np.ndarray, ...]:
        return self.grid.derivatives(self.coeffs)

    def degree_norms(self) -> np.ndarray:
        """L2 norm of each degree-l block."""
        ell = degrees(self.lmax)
        return np.sqrt(np.bincount(ell, weights=self.coeffs**2, minlength=self.lmax + 1))

    def inner(self, other: "SphereField") -> float:
        _check_same_lmax(self, other)
        return float(np.dot(self.coeffs, other.coeffs))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_list(self) -> List[float]:
        return [float(c) for c in self.coeffs]

    # arithmetic

    def __add__(self, other: "SphereField") -> "SphereField":
        _check_same_lmax(self, other)
        return SphereField(self.lmax, self.coeffs + other.coeffs)

    def __sub__(self, other: "SphereField") -> "SphereField":
        _check_same_lmax(self, other)
        return SphereField(self.lmax, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SphereField":
        return SphereField(self.lmax, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "SphereField":
        return SphereField(self.lmax, self.coeffs / float(scalar))

    def __neg__(self) -> "SphereField":
        return SphereField(self.lmax, -self.coeffs)


def _check_same_lmax(a: SphereField, b: SphereField) -> None:
    if a.lmax != b.lmax:
        raise ConfigError(f"band limits differ: {a.lmax} vs {b.lmax}")


def as_field(f: Union[SphereField, np.ndarray], lmax: int) -> SphereField:
    """Accept either a SphereField or a flat coefficient vector."""
    if isinstance(f, SphereField):
        return f
    return SphereField(lmax, np.asarray(f, dtype=float))


def _check_rho(rho: float) -> float:
    if not 0.0 < rho < np.pi:
        raise ConfigError(f"rho must lie in (0, pi), got {rho}")
    return float(rho)


def laplace_beltrami(f: SphereField) -> SphereField:
    """Delta_{S^2}: c_lm -> -l(l+1) c_lm."""
    ell = degrees(f.lmax)
    return SphereField(f.lmax, -ell * (ell + 1) * f.coeffs)


def project_Kperp(f: SphereField) -> SphereField:
    """L2-orthogonal projector onto the complement of span{1, x, y, z}."""
    c = f.coeffs.copy()
    c[:KERNEL_SIZE] = 0.0
    return SphereField(f.lmax, c)


def i0pp_symbol(lmax: int, rho: float) -> np.ndarray:
    """Spectral symbol l(l+1)(l(l+1)-2) / (2 sin^4 rho) of the second variation."""
    rho = _check_rho(rho)
    ell = degrees(lmax)
    lam = ell * (ell + 1)
    return lam * (lam - 2) / (2.0 * np.sin(rho) ** 4)


def apply_I0pp(f: SphereField, rho: float) -> SphereField:
    """(1/(2 sin^4 rho)) Delta (Delta + 2) applied spectrally."""
    return SphereField(f.lmax, i0pp_symbol(f.lmax, rho) * f.coeffs)


def invert_I0pp(f: SphereField, rho: float, kernel_tol: float = 1e-12) -> SphereField:
    """Inverse of apply_I0pp on the complement of the kernel."""
    kernel_norm = float(np.linalg.norm(f.coeffs[:KERNEL_SIZE]))
    if kernel_norm > kernel_tol:
        raise KernelComponentPresent(
            f"l <= 1 component of norm {kernel_norm:.3e} exceeds {kernel_tol:.1e}; "
            "project onto the kernel complement first"
        )
    symbol = i0pp_symbol(f.lmax, rho)
    c = np.zeros_like(f.coeffs)
    c[KERNEL_SIZE:] = f.coeffs[KERNEL_SIZE:] / symbol[KERNEL_SIZE:]
    return SphereField(f.lmax, c)


# flat indices of q0..q3 = 1/sqrt(4 pi), x, y, z (normalised)
KERNEL_INDICES = (lm_index(0, 0), lm_index(1, 1), lm_index(1, -1), lm_index(1, 0))


def kernel_basis(lmax: int) -> List[SphereField]:
    """Orthonormal basis q0..q3 of the kernel of Delta(Delta+2)."""
    return [SphereField.harmonic(lmax, *_lm_of(k)) for k in KERNEL_INDICES]


def kernel_components(f: SphereField) -> np.ndarray:
    """Inner products (f, q_i) for i = 0..3 in kernel_basis order."""
    return np.array([f.coeffs[k] for k in KERNEL_INDICES])


def _lm_of(k: int) -> Tuple[int, int]:
    l = int(np.floor(np.sqrt(k)))
    return l, k - l * l - l
