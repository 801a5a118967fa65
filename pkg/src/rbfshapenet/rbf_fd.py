"""RBF-FD stencils, local Laplacian weights and sparse global operators."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import SingularSystem
from .rbf_core import (KernelFamily, KernelSpec, PolyBasis, as_coords, augmented_matrices,
                       build_augmented_system, frobenius_cond_batch, phi,
                       phi_laplacian)
from .shape_param import ShapeStrategy, epsilons_for_stencils

# distances within this relative gap of each other count as ties
TIE_RTOL = 1e-10
_CHUNK = 20000


class FdMode(str, enum.Enum):
    COLLOCATED = "collocated"
    OVERSAMPLED = "oversampled"


@dataclass
class FdConfig:
    strategy: ShapeStrategy
    stencil_size: int = 10
    kernel_family: KernelFamily = KernelFamily.IMQ
    mode: FdMode = FdMode.COLLOCATED
    oversampling: int = 4
    poly_degree: int = 0

    def __post_init__(self):
        self.kernel_family = KernelFamily.parse(self.kernel_family)
        self.mode = FdMode(self.mode)
        if self.oversampling < 1:
            raise ValueError("oversampling factor must be >= 1")


@dataclass
class GlobalOperator:
    matrix: sp.csr_matrix          # (M, N)
    stencils: np.ndarray           # (N, n) neighbour indices, ascending
    nu: np.ndarray                 # (M,) stencil used by each evaluation row
    eps: np.ndarray                # (N,) shape parameter per stencil
    cond: np.ndarray               # (N,) Frobenius condition number per stencil
    skipped_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def shape(self):
        return self.matrix.shape

    def used_stencils(self):
        keep = np.ones(self.nu.shape[0], dtype=bool)
        keep[self.skipped_rows] = False
        return np.unique(self.nu[keep])

    def stats(self):
        """(min, median, max) of cond and eps over the stencils actually used."""
        idx = self.used_stencils()
        c, e = self.cond[idx], self.eps[idx]
        pick = lambda a: (float(np.min(a)), float(np.median(a)), float(np.max(a)))
        return {"cond": pick(c), "eps": pick(e)}

    def triplets(self):
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def write_triplets(self, path):
        r, c, v = self.triplets()
        with Path(path).open("w") as fh:
            for a, b, x in zip(r, c, v):
                fh.write(f"{a} {b} {float(x)!r}\n")


def _ranked(dist, idx, k):
    """First k candidates per row after breaking distance ties by index."""
    dist = np.atleast_2d(dist)
    idx = np.atleast_2d(idx)
    kth = dist[:, k - 1:k]
    tied = np.abs(dist - kth) <= TIE_RTOL * np.maximum(kth, np.finfo(float).tiny)
    key = np.where(tied, kth, dist)
    order = np.lexsort((idx, key), axis=-1)
    return np.take_along_axis(idx, order, axis=1)[:, :k]


def stencil_indices(X, n: int, centers=None):
    """Neighbour lists of size n for each centre, indices ascending.

    Ties at the n-th distance go to the lowest point index.
    """
    P = as_coords(X)
    N = P.shape[0]
    if not 1 <= n <= N:
        raise ValueError(f"stencil size {n} must lie in [1, {N}]")
    centers = np.arange(N) if centers is None else np.atleast_1d(centers)
    tree = cKDTree(P)
    pad = min(N, n + 2 * P.shape[1] * 4)
    while True:
        dist, idx = tree.query(P[centers], k=pad)
        dist = np.atleast_2d(dist).reshape(len(centers), -1)
        idx = np.atleast_2d(idx).reshape(len(centers), -1)
        kth = dist[:, n - 1]
        # every point tied with the n-th must be among the candidates
        if pad == N or np.all(dist[:, -1] > kth * (1 + TIE_RTOL)):
            break
        pad = min(N, 2 * pad)
    return np.sort(_ranked(dist, idx, n), axis=1)


def nearest_neighbors(X, i: int, n: int) -> np.ndarray:
    return stencil_indices(X, n, centers=[i])[0]


def assign_evaluation_points(Y, X) -> np.ndarray:
    """nu(y): index of the nearest centre, lowest index on ties."""
    Q, P = as_coords(Y), as_coords(X)
    k = min(P.shape[0], 8)
    dist, idx = cKDTree(P).query(Q, k=k)
    if k == 1:
        return np.asarray(idx, dtype=int).reshape(-1)
    return _ranked(dist.reshape(len(Q), k), idx.reshape(len(Q), k), 1)[:, 0]


def local_laplacian_weights(stencil, eval_point, kernel: KernelSpec, poly: PolyBasis | None = None):
    """Weights w with sum_k w_k u(x_k) approximating (Laplacian u)(y)."""
    system = build_augmented_system(stencil, kernel, poly)
    z = system.adjoint_solve(system.laplacian_row(np.reshape(eval_point, (1, system.dim))))
    return z[0, : system.n]


def _eval_rows(family, eps, Ps, Ys, degree, kind="laplacian"):
    """L q(y) (or q(y) for interpolation) per (stencil, y) pair; Ps (K, n, d), Ys (K, d)."""
    d = Ps.shape[-1]
    r = np.linalg.norm(Ys[:, None, :] - Ps, axis=-1)
    poly = PolyBasis(degree, d)
    rows = np.zeros((Ps.shape[0], Ps.shape[1] + poly.m))
    if kind == "laplacian":
        rows[:, : Ps.shape[1]] = phi_laplacian(family, eps[:, None], r, d)
        if poly.m:
            rows[:, Ps.shape[1]:] = poly.laplacian(Ys)
    else:
        rows[:, : Ps.shape[1]] = phi(family, eps[:, None], r)
        if poly.m:
            rows[:, Ps.shape[1]:] = poly.evaluate(Ys)
    return rows


def _solve_rows(Bs, rows, stencil_ids):
    """Adjoint solves B^T z = row for a batch; raises SingularSystem on failure."""
    Bt = np.swapaxes(Bs, 1, 2)
    try:
        z = np.linalg.solve(Bt, rows[..., None])[..., 0]
    except np.linalg.LinAlgError:
        z = np.empty_like(rows)
        for k in range(Bt.shape[0]):
            try:
                z[k] = np.linalg.solve(Bt[k], rows[k])
            except np.linalg.LinAlgError as exc:
                raise SingularSystem(f"local system of stencil {stencil_ids[k]} is singular",
                                     stencil=int(stencil_ids[k])) from exc
    return z


def assemble_global_operator(X, config: FdConfig, Y=None, skip_rows=None,
                             kind: str = "laplacian") -> GlobalOperator:
    """Sparse (M, N) Laplacian operator.

    Collocated mode evaluates at the centres (M = N); oversampled mode needs
    the evaluation points ``Y``. Rows listed in ``skip_rows`` are left empty
    (boundary rows overwritten by the caller). ``kind="interpolation"``
    gives the local cardinal functions instead of their Laplacians.
    """
    if kind not in ("laplacian", "interpolation"):
        raise ValueError(f"unknown operator kind {kind!r}")
    P = as_coords(X)
    N, d = P.shape
    n = config.stencil_size
    if config.mode is FdMode.COLLOCATED:
        if Y is not None and as_coords(Y).shape[0] != N:
            raise ValueError("collocated assembly evaluates at the centres (M = N)")
        Yc, nu = P, np.arange(N)
    else:
        if Y is None:
            raise ValueError("oversampled assembly needs evaluation points")
        Yc = as_coords(Y)
        nu = assign_evaluation_points(Yc, P)
    M = Yc.shape[0]
    skip = np.zeros(M, dtype=bool)
    if skip_rows is not None:
        skip[np.asarray(skip_rows, dtype=int)] = True

    stencils = stencil_indices(P, n)
    eps, _ = epsilons_for_stencils(config.strategy, P[stencils] if d > 1 else P[stencils, 0])
    Bs = augmented_matrices(P[stencils], config.kernel_family, eps, config.poly_degree)
    cond = frobenius_cond_batch(Bs)

    rows_all = np.flatnonzero(~skip)
    data = np.zeros((rows_all.size, n))
    for start in range(0, rows_all.size, _CHUNK):
        rows = rows_all[start:start + _CHUNK]
        sid = nu[rows]
        L = _eval_rows(config.kernel_family, eps[sid], P[stencils[sid]], Yc[rows],
                       config.poly_degree, kind)
        z = _solve_rows(Bs[sid], L, sid)
        data[start:start + rows.size] = z[:, :n]
    if not np.all(np.isfinite(data)):
        bad = int(nu[rows_all[np.flatnonzero(~np.all(np.isfinite(data), axis=1))[0]]])
        raise SingularSystem(f"non-finite weights from stencil {bad}", stencil=bad)

    cols = stencils[nu[rows_all]]
    A = sp.csr_matrix((data.ravel(), (np.repeat(rows_all, n), cols.ravel())), shape=(M, N))
    A.sort_indices()
    return GlobalOperator(A, stencils, nu, eps, cond, np.flatnonzero(skip))
