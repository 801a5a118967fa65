"""Heat (BDF2, injection boundary conditions) and steady 2D Poisson solvers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (LengthMismatch, NonFiniteState, SingularGlobalSystem,
                     SingularTimeStepSystem)
from .rbf_core import as_coords
from .rbf_fd import FdConfig, assemble_global_operator

# a state this many times larger than the initial data counts as diverged
BLOWUP_FACTOR = 10.0
SERIES_TOL = 1e-16


class HeatIC(str, enum.Enum):
    QUADRATIC = "quadratic"
    SINE = "sine"


@dataclass(frozen=True)
class HeatProblem:
    ic: HeatIC = HeatIC.QUADRATIC
    dt: float = 1e-3
    T: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ic", HeatIC(self.ic))
        if not self.dt > 0 or not self.T > 0:
            raise ValueError("dt and T must be positive")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ValueError("dt must divide T")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    def initial(self, x):
        return exact_heat(self, x, 0.0)


def quadratic_series_terms(t: float) -> int:
    """Largest odd mode kept so the first omitted term is below SERIES_TOL."""
    n = 1
    while 8.0 / (n**3 * math.pi**3) * math.exp(-(n * math.pi) ** 2 * t) >= SERIES_TOL:
        n += 2
    return n - 2


def exact_heat(problem, x, t: float):
    ic = problem.ic if isinstance(problem, HeatProblem) else HeatIC(problem)
    x = np.asarray(x, dtype=float)
    if ic is HeatIC.SINE:
        return 6.0 * np.sin(np.pi * x) * math.exp(-math.pi**2 * t)
    if t == 0.0:
        # the series converges to the initial profile itself
        return -x * x + x
    out = np.zeros_like(x)
    for n in range(1, quadratic_series_terms(t) + 1, 2):
        out += 8.0 / (n**3 * math.pi**3) * np.sin(n * math.pi * x) * math.exp(-(n * math.pi) ** 2 * t)
    return out


def l1_error(u_exact, u_approx) -> float:
    a = np.asarray(u_exact, dtype=float).ravel()
    b = np.asarray(u_approx, dtype=float).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"length {a.size} != {b.size}")
    return float(np.mean(np.abs(a - b)))


@dataclass(frozen=True)
class FdmBaseline:
    """Classical three-point second difference (non-uniform spacing allowed)."""


def fdm_laplacian_1d(x) -> sp.csr_matrix:
    """Three-point second-derivative matrix with empty boundary rows."""
    x = np.asarray(x, dtype=float)
    N = x.size
    hl = x[1:-1] - x[:-2]
    hr = x[2:] - x[1:-1]
    rows = np.repeat(np.arange(1, N - 1), 3)
    cols = (np.arange(1, N - 1)[:, None] + np.array([-1, 0, 1])).ravel()
    vals = np.stack([2 / (hl * (hl + hr)), -2 / (hl * hr), 2 / (hr * (hl + hr))], axis=1).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


@dataclass
class HeatResult:
    x: np.ndarray
    u: np.ndarray                 # final state (last accepted one on blow-up)
    l1_error: float               # mean over time levels of the spatial L1 error
    l1_error_final: float         # spatial L1 error at T
    status: str = "ok"
    steps_taken: int = 0
    stats: dict = field(default_factory=dict)


def _splu(A, exc):
    try:
        return spla.splu(sp.csc_matrix(A))
    except RuntimeError as err:
        raise exc(f"time-step matrix is singular: {err}") from err


def _march(L, x, problem: HeatProblem, boundary):
    """BDF2 with an implicit-Euler start; yields (step, state)."""
    N = x.size
    I = sp.identity(N, format="csc")
    dt = problem.dt
    u0 = problem.initial(x)
    u0[boundary] = 0.0
    yield 0, u0
    scale = BLOWUP_FACTOR * max(np.max(np.abs(u0)), 1e-300)

    def check(k, u):
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > scale:
            raise NonFiniteState(f"solution diverged at step {k}", step=k)

    u1 = _splu(I - dt * L, SingularTimeStepSystem).solve(u0)
    u1[boundary] = 0.0
    check(1, u1)
    yield 1, u1
    lu = _splu(3.0 * I - 2.0 * dt * L, SingularTimeStepSystem)
    um, uc = u0, u1
    for k in range(2, problem.steps + 1):
        un = lu.solve(4.0 * uc - um)
        un[boundary] = 0.0
        check(k, un)
        um, uc = uc, un
        yield k, un


def solve_heat_bdf2(problem: HeatProblem, X, config) -> HeatResult:
    """Heat equation on [0, 1] with zero Dirichlet data.

    ``config`` is an FdConfig (RBF-FD operator) or FdmBaseline. The
    reported ``l1_error`` averages the spatial L1 error over every time
    level 0..T/dt; ``l1_error_final`` is the error at T alone. A diverging
    run returns status "blowup" with infinite errors.
    """
    x = np.asarray(X, dtype=float).ravel()
    if np.any(np.diff(x) <= 0):
        raise ValueError("heat points must be strictly increasing")
    if x[0] != 0.0 or x[-1] != 1.0:
        raise ValueError("heat points must include both boundary points 0 and 1")
    boundary = np.array([0, x.size - 1])
    stats = {}
    if isinstance(config, FdmBaseline):
        L = fdm_laplacian_1d(x)
    else:
        op = assemble_global_operator(x, config, skip_rows=boundary)
        L = op.matrix
        stats = op.stats()
    errors = []
    u = problem.initial(x)
    try:
        for k, u in _march(L, x, problem, boundary):
            errors.append(l1_error(exact_heat(problem, x, k * problem.dt), u))
    except NonFiniteState as exc:
        return HeatResult(x, u, math.inf, math.inf, "blowup", exc.step - 1, stats)
    return HeatResult(x, u, float(np.mean(errors)), errors[-1], "ok", problem.steps, stats)


# -- 2D Poisson ---------------------------------------------------------------

@dataclass(frozen=True)
class PoissonProblem2D:
    """Laplacian u = f on the unit square with exact solution sin(2 pi x y)."""

    @staticmethod
    def exact(P):
        P = as_coords(P, 2)
        return np.sin(2 * np.pi * P[:, 0] * P[:, 1])

    @staticmethod
    def forcing(P):
        P = as_coords(P, 2)
        x, y = P[:, 0], P[:, 1]
        return -4 * np.pi**2 * np.sin(2 * np.pi * x * y) * (x * x + y * y)

    def check_forcing(self, samples=16, h=1e-3, tol=1e-8, seed=0):
        """Compare the forcing with a fourth-order difference Laplacian of the exact solution."""
        P = np.random.default_rng(seed).uniform(0.1, 0.9, size=(samples, 2))
        lap = np.zeros(samples)
        for axis in range(2):
            e = np.zeros(2)
            e[axis] = h
            c = [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]
            lap += sum(ck * self.exact(P + (k - 2) * e) for k, ck in enumerate(c)) / h**2
        err = float(np.max(np.abs(lap - self.forcing(P))))
        if err > tol:
            raise ValueError(f"forcing does not match the exact Laplacian (max error {err:.3g})")
        return err


def grid_points_2d(n: int) -> np.ndarray:
    """n x n grid on the unit square, row-major with x varying fastest."""
    g = np.linspace(0.0, 1.0, n)
    xx, yy = np.meshgrid(g, g)
    return np.column_stack([xx.ravel(), yy.ravel()])


def boundary_mask_2d(P) -> np.ndarray:
    P = as_coords(P, 2)
    return np.any((P == 0.0) | (P == 1.0), axis=1)


@dataclass
class PoissonResult:
    points: np.ndarray
    u: np.ndarray
    l1_error: float
    status: str = "ok"
    stats: dict = field(default_factory=dict)


def solve_poisson_2d(problem: PoissonProblem2D, n: int, config: FdConfig,
                     boundary_values=None, forcing=None) -> PoissonResult:
    """Collocated RBF-FD solve on an n x n grid with identity boundary rows.

    A solution larger than BLOWUP_FACTOR times the exact one, or a non-finite
    one, is flagged "blowup"; its error is still reported.
    """
    if config.mode.value != "collocated":
        raise ValueError("the Poisson solver uses collocated assembly")
    problem.check_forcing()
    P = grid_points_2d(n)
    bnd = np.flatnonzero(boundary_mask_2d(P))
    op = assemble_global_operator(P, config, skip_rows=bnd)
    A = op.matrix.tolil()
    A[bnd, bnd] = 1.0
    exact = problem.exact(P)
    rhs = problem.forcing(P) if forcing is None else np.asarray(forcing, dtype=float).copy()
    rhs[bnd] = exact[bnd] if boundary_values is None else np.asarray(boundary_values)[bnd]
    try:
        u = spla.splu(sp.csc_matrix(A)).solve(rhs)
    except RuntimeError as err:
        raise SingularGlobalSystem(f"global Poisson system is singular: {err}") from err
    status = "ok"
    if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > BLOWUP_FACTOR * max(np.max(np.abs(exact)), 1.0):
        status = "blowup"
    err = l1_error(exact, u) if np.all(np.isfinite(u)) else math.inf
    return PoissonResult(P, u, err, status, op.stats())
