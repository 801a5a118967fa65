"""Kernels, augmented interpolation systems and cardinal functions.

An RBF interpolant on centers x_1..x_N is

    S(y) = sum_i lambda_i phi(|y - x_i|) + sum_k gamma_k p_k(y)

with coefficients fixed by interpolation plus moment conditions, i.e. the
block system B [lambda; gamma] = [f; 0] with B = [[A, P], [P^T, 0]].
Only the inverse multiquadric and Gaussian kernels are provided.

Two code paths exist. ``build_augmented_system`` and friends work on one
point set and keep a scipy LU factorization around. The ``*_batch``
helpers assemble and invert stacks of small systems in one LAPACK call,
which is what training and RBF-FD assembly use.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.linalg as sla
from scipy.spatial import cKDTree

from .errors import DegeneratePointSet, SingularSystem

logger = logging.getLogger(__name__)

# relative residual bound for dense solves of the augmented system
TOL_SOLVE = 1e-9

# admissible shape-parameter range; predictions outside are clamped
EPS_MIN = 1e-3
EPS_MAX = 1e6


def clamp_eps(eps):
    """Clamp to [EPS_MIN, EPS_MAX]; NaN maps to EPS_MIN."""
    eps = np.asarray(eps, dtype=float)
    return np.clip(np.nan_to_num(eps, nan=EPS_MIN), EPS_MIN, EPS_MAX)


class KernelFamily(str, enum.Enum):
    IMQ = "imq"
    GAUSSIAN = "gaussian"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"ga": "gaussian", "gauss": "gaussian", "garbf": "gaussian",
                   "imqrbf": "imq", "inverse_multiquadric": "imq"}
        return cls(aliases.get(key, key))


def phi(family, eps, r):
    """Vectorized kernel values; ``eps`` broadcasts against ``r``."""
    family = KernelFamily.parse(family)
    s = np.square(np.multiply(eps, r))
    if family is KernelFamily.IMQ:
        return 1.0 / np.sqrt(1.0 + s)
    return np.exp(-s)


def phi_laplacian(family, eps, r, dim):
    """Radial Laplacian phi'' + (dim-1)/r phi' as a closed form in r.

    Both closed forms are regular at r = 0 (the 1/r factor cancels against
    phi'), so the diagonal of a collocated stencil needs no special case:
    the value there is dim * phi''(0).
    """
    family = KernelFamily.parse(family)
    eps2 = np.square(eps)
    s = eps2 * np.square(r)
    if family is KernelFamily.IMQ:
        onep = 1.0 + s
        return eps2 * (2.0 * s - 1.0) * onep ** -2.5 - (dim - 1) * eps2 * onep ** -1.5
    return (4.0 * eps2 * s - 2.0 * dim * eps2) * np.exp(-s)


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily.parse(self.family))
        eps = float(self.epsilon)
        if not (eps > 0.0 and math.isfinite(eps)):
            raise ValueError(f"shape parameter must be positive and finite, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)

    def __call__(self, r):
        return phi(self.family, self.epsilon, r)

    def laplacian(self, r, dim):
        return phi_laplacian(self.family, self.epsilon, r, dim)


def kernel_eval(kernel: KernelSpec, r):
    return kernel(r)


def kernel_laplacian(kernel: KernelSpec, r, dim: int):
    return kernel.laplacian(r, dim)


@dataclass(frozen=True)
class PolyBasis:
    """Monomials of total degree <= ``degree`` in ``dim`` variables.

    ``degree = -1`` disables the polynomial block.
    """

    degree: int = 0
    dim: int = 1
    exponents: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.degree < -1:
            raise ValueError("polynomial degree must be >= -1")
        if self.dim not in (1, 2):
            raise ValueError("only 1D and 2D are supported")
        exps = []
        for total in range(self.degree + 1):
            if self.dim == 1:
                exps.append((total,))
            else:
                exps.extend((total - j, j) for j in range(total + 1))
        object.__setattr__(self, "exponents", tuple(exps))

    @property
    def m(self) -> int:
        if self.degree < 0:
            return 0
        return comb(self.degree + self.dim, self.dim)

    def evaluate(self, points):
        """Return the (Q, m) matrix of monomial values."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        out = np.ones((pts.shape[0], self.m))
        for k, exp in enumerate(self.exponents):
            for axis, e in enumerate(exp):
                if e:
                    out[:, k] *= pts[:, axis] ** e
        return out

    def laplacian(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        out = np.zeros((pts.shape[0], self.m))
        for k, exp in enumerate(self.exponents):
            for axis, e in enumerate(exp):
                if e < 2:
                    continue
                term = np.full(pts.shape[0], float(e * (e - 1)))
                for other, e2 in enumerate(exp):
                    power = e2 - 2 if other == axis else e2
                    if power:
                        term *= pts[:, other] ** power
                out[:, k] += term
        return out


def as_coords(points, dim=None) -> np.ndarray:
    """Coerce to an (N, dim) float array without reordering."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(-1, dim)
    if arr.ndim != 2 or arr.shape[1] not in (1, 2):
        raise ValueError(f"expected points of shape (N,) or (N, 1|2), got {np.shape(points)}")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"expected {dim}-dimensional points, got {arr.shape[1]}")
    return arr


def min_separation(coords) -> float:
    coords = as_coords(coords)
    if coords.shape[0] < 2:
        return math.inf
    if coords.shape[1] == 1:
        return float(np.min(np.diff(np.sort(coords[:, 0]))))
    dist, _ = cKDTree(coords).query(coords, k=2)
    return float(np.min(dist[:, 1]))


def point_set(coords, dim=None) -> np.ndarray:
    """Validated point set: pairwise distinct, 1D sets sorted ascending."""
    arr = as_coords(coords, dim)
    if arr.shape[1] == 1:
        arr = np.sort(arr, axis=0)
    if not np.all(np.isfinite(arr)):
        raise DegeneratePointSet("point coordinates must be finite")
    if min_separation(arr) <= 0.0:
        raise DegeneratePointSet("point set contains duplicate points")
    return arr


def distance_matrix(a, b) -> np.ndarray:
    a = as_coords(a)
    b = as_coords(b, a.shape[1])
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


@dataclass(frozen=True)
class InterpolantCoefficients:
    lam: np.ndarray
    gamma: np.ndarray


@dataclass(frozen=True, eq=False)
class AugmentedSystem:
    points: np.ndarray
    kernel: KernelSpec
    poly: PolyBasis
    B: np.ndarray
    lu: tuple
    cond_frobenius: float

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def rhs_row(self, query) -> np.ndarray:
        """q(y) for each query: (Q, N + m)."""
        q = as_coords(query, self.dim)
        r = distance_matrix(q, self.points)
        return np.hstack([self.kernel(r), self.poly.evaluate(q)])

    def laplacian_row(self, query) -> np.ndarray:
        """L q(y) with L the Laplacian: (Q, N + m)."""
        q = as_coords(query, self.dim)
        r = distance_matrix(q, self.points)
        return np.hstack([self.kernel.laplacian(r, self.dim), self.poly.laplacian(q)])

    def adjoint_solve(self, rows) -> np.ndarray:
        """Solve B^T z = row^T for each row; returns (Q, N + m)."""
        rows = np.atleast_2d(rows)
        return sla.lu_solve(self.lu, rows.T, trans=1, check_finite=False).T


def _zero_pivot(lu_matrix):
    diag = np.diag(lu_matrix)
    bad = np.flatnonzero(diag == 0.0)
    return int(bad[0]) if bad.size else None


def assemble_B(points, kernel: KernelSpec, poly: PolyBasis) -> np.ndarray:
    pts = as_coords(points)
    n, m = pts.shape[0], poly.m
    B = np.zeros((n + m, n + m))
    B[:n, :n] = kernel(distance_matrix(pts, pts))
    if m:
        P = poly.evaluate(pts)
        B[:n, n:] = P
        B[n:, :n] = P.T
    return B


def build_augmented_system(points, kernel: KernelSpec, poly: PolyBasis | None = None) -> AugmentedSystem:
    """Assemble B, LU-factorize it and record ||B||_F ||B^-1||_F.

    Raises SingularSystem if the factorization produces a zero pivot.
    """
    pts = as_coords(points)
    if poly is None:
        poly = PolyBasis(0, pts.shape[1])
    if poly.dim != pts.shape[1]:
        raise ValueError("polynomial basis dimension does not match the points")
    if pts.shape[0] < poly.m:
        raise ValueError("need at least as many points as monomials")
    B = assemble_B(pts, kernel, poly)
    lu = sla.lu_factor(B, check_finite=False)
    pivot = _zero_pivot(lu[0])
    if pivot is not None:
        raise SingularSystem(f"augmented system is singular (zero pivot at {pivot})", pivot=pivot)
    Binv = sla.lu_solve(lu, np.eye(B.shape[0]), check_finite=False)
    cond = float(np.linalg.norm(B) * np.linalg.norm(Binv))
    if not math.isfinite(cond):
        cond = math.inf
    return AugmentedSystem(pts, kernel, poly, B, lu, cond)


def solve_interpolant(system: AugmentedSystem, values) -> InterpolantCoefficients:
    f = np.asarray(values, dtype=float).reshape(-1)
    if f.shape[0] != system.n:
        raise ValueError(f"expected {system.n} data values, got {f.shape[0]}")
    rhs = np.concatenate([f, np.zeros(system.poly.m)])
    coef = sla.lu_solve(system.lu, rhs, check_finite=False)
    return InterpolantCoefficients(coef[: system.n], coef[system.n:])


def _queries(system, query):
    """(coords, single) for a scalar / single point / batch of points."""
    q = np.asarray(query, dtype=float)
    if q.ndim == 0:
        return q.reshape(1, 1), True
    if system.dim > 1 and q.ndim == 1:
        return q.reshape(1, system.dim), True
    return as_coords(q, system.dim), False


def evaluate_interpolant(coeffs: InterpolantCoefficients, system: AugmentedSystem, query):
    """S(y) at one point (returns float) or many points (returns array)."""
    q, single = _queries(system, query)
    out = system.rhs_row(q) @ np.concatenate([coeffs.lam, coeffs.gamma])
    return float(out[0]) if single else out


def cardinal_row(system: AugmentedSystem, query) -> np.ndarray:
    """Cardinal weights Psi_i(y) = [q(y) B^-1]_i, i <= N.

    Returns shape (N,) for a single query and (Q, N) for several.
    """
    q, single = _queries(system, query)
    z = system.adjoint_solve(system.rhs_row(q))[:, : system.n]
    return z[0] if single else z


# -- batched helpers ---------------------------------------------------------

def augmented_matrices(stencils, family, eps, degree: int = 0) -> np.ndarray:
    """Stack of augmented matrices for stencils of shape (S, n, d)."""
    X = np.asarray(stencils, dtype=float)
    if X.ndim == 2:
        X = X[..., None]
    S, n, d = X.shape
    poly = PolyBasis(degree, d)
    m = poly.m
    diff = X[:, :, None, :] - X[:, None, :, :]
    r = np.sqrt(np.einsum("sijk,sijk->sij", diff, diff))
    eps = np.broadcast_to(np.asarray(eps, dtype=float), (S,))
    out = np.zeros((S, n + m, n + m))
    out[:, :n, :n] = phi(family, eps[:, None, None], r)
    if m:
        P = poly.evaluate(X.reshape(-1, d)).reshape(S, n, m)
        out[:, :n, n:] = P
        out[:, n:, :n] = np.swapaxes(P, 1, 2)
    return out


def frobenius_cond_batch(Bs) -> np.ndarray:
    """||B||_F ||B^-1||_F for a stack; +inf where B is singular."""
    Bs = np.asarray(Bs, dtype=float)
    norms = np.linalg.norm(Bs, axis=(1, 2))
    try:
        inv = np.linalg.inv(Bs)
        cond = norms * np.linalg.norm(inv, axis=(1, 2))
    except np.linalg.LinAlgError:
        # det comes from the same LU and does not raise; an exact zero pivot gives 0
        cond = np.full(Bs.shape[0], math.inf)
        ok = np.linalg.det(Bs) != 0.0
        try:
            cond[ok] = norms[ok] * np.linalg.norm(np.linalg.inv(Bs[ok]), axis=(1, 2))
        except np.linalg.LinAlgError:
            for k, B in enumerate(Bs):
                try:
                    cond[k] = norms[k] * np.linalg.norm(np.linalg.inv(B))
                except np.linalg.LinAlgError:
                    cond[k] = math.inf
    cond[~np.isfinite(cond)] = math.inf
    return cond


def cond_for_stencils(stencils, family, eps, degree: int = 0) -> np.ndarray:
    return frobenius_cond_batch(augmented_matrices(stencils, family, eps, degree))
