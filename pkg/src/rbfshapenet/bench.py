"""Benchmark suites that regenerate the interpolation and PDE experiments as CSV."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericalError
from .pde import (FdmBaseline, HeatProblem, PoissonProblem2D, grid_points_2d, solve_heat_bdf2,
                  solve_poisson_2d)
from .rbf_core import KernelFamily, augmented_matrices, frobenius_cond_batch, phi
from .rbf_fd import FdConfig, FdMode, assemble_global_operator
from .shape_param import ShapeStrategy, epsilons_for_stencils

CSV_FIELDS = ["case", "kernel", "strategy", "N", "M", "dt", "l1_error", "cond_min", "cond_med",
              "cond_max", "eps_min", "eps_med", "eps_max", "status"]
STATUSES = ("ok", "blowup", "singular")
HEAT_LADDER = (10, 19, 37, 73, 145)
POISSON_LADDER = (10, 20, 40, 80, 160, 320)
INTERP2D_LADDER = (10, 20, 40, 80, 160, 320)
JITTER_SEED = 7
BLOWUP_FACTOR = 10.0


# -- test functions -------------------------------------------------------------

def f1(x):
    return np.exp(np.sin(np.pi * np.asarray(x, dtype=float)))


def f2(x):
    x = np.asarray(x, dtype=float)
    return 1.0 / (1.0 + 16.0 * x * x)


def f3(P):
    """Franke's function in the form used for the 2D tables."""
    P = np.asarray(P, dtype=float)
    x, y = 9 * P[:, 0], 9 * P[:, 1]
    return (0.75 * np.exp(-((x - 2) ** 2 + (y - 2) ** 2) / 4)
            + 0.75 * np.exp(-(x + 1) ** 2 / 49 - (y + 1) ** 2 / 10)
            + 0.5 * np.exp(-((x - 7) ** 2 + (y - 3) ** 2) / 4)
            - 0.2 * np.exp(-(x - 4) ** 2 - (y - 7) ** 2))


def f4(P, alpha=0.1):
    P = np.asarray(P, dtype=float)

    def g(t):
        return 1 + math.exp(-1 / alpha) - np.exp(-t / alpha) - np.exp((t - 1) / alpha)

    return g(P[:, 0]) * g(P[:, 1])


# -- point sets -------------------------------------------------------------------

def refine_midpoints(x):
    x = np.asarray(x, dtype=float)
    out = np.empty(2 * x.size - 1)
    out[0::2] = x
    out[1::2] = 0.5 * (x[:-1] + x[1:])
    return out


def ladder_points_1d(N: int, equidistant: bool = True, seed: int = JITTER_SEED, base: int = 10):
    """Points for ladder rung N = (base-1) 2^k + 1.

    Non-equidistant sets jitter the interior of the base grid by up to 0.3h
    (seeded) and refine by midpoint insertion.
    """
    k = math.log2((N - 1) / (base - 1))
    if k < 0 or abs(k - round(k)) > 1e-12:
        raise ValueError(f"N={N} is not on the (base-1)*2^k+1 ladder")
    x = np.linspace(0.0, 1.0, base)
    if not equidistant:
        h = 1.0 / (base - 1)
        rng = np.random.default_rng(seed)
        x[1:-1] += rng.uniform(-0.3 * h, 0.3 * h, size=base - 2)
    for _ in range(int(round(k))):
        x = refine_midpoints(x)
    return x


# -- result rows ------------------------------------------------------------------

@dataclass
class BenchRow:
    case: str
    kernel: str
    strategy: str
    N: int
    M: int
    dt: float | None
    l1_error: float
    cond: tuple = (math.nan, math.nan, math.nan)
    eps: tuple = (math.nan, math.nan, math.nan)
    status: str = "ok"
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def csv_record(self):
        fmt = lambda v: "" if v is None else (repr(float(v)) if isinstance(v, float) else v)
        rec = {"case": self.case, "kernel": self.kernel, "strategy": self.strategy,
               "N": self.N, "M": self.M, "dt": fmt(self.dt), "l1_error": fmt(self.l1_error),
               "status": self.status}
        for name, trio in (("cond", self.cond), ("eps", self.eps)):
            for tag, v in zip(("min", "med", "max"), trio):
                rec[f"{name}_{tag}"] = fmt(float(v))
        return rec


def _trio(a):
    a = np.asarray(a, dtype=float)
    return float(np.min(a)), float(np.median(a)), float(np.max(a))


def write_csv(rows, path, plot_title=None):
    """Write rows plus a gnuplot stub next to the CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow(r.csv_record())
    stub = path.with_suffix(".gp")
    title = plot_title or path.stem
    stub.write_text(
        "set datafile separator ','\n"
        "set logscale xy\n"
        "set xlabel 'N'\nset ylabel 'L1 error'\n"
        f"set title '{title}'\n"
        f"plot '{path.name}' using 4:7 every ::1 with linespoints title 'l1_error'\n")
    return path


def read_csv(path):
    with Path(path).open() as fh:
        return list(csv.DictReader(fh))


# -- 1D cluster interpolation -----------------------------------------------------

def cluster_interpolation_1d(fn, x, strategy: ShapeStrategy, family=KernelFamily.IMQ,
                             n: int = 10, oversampling: int = 4):
    """Piecewise interpolation on consecutive n-point clusters sharing endpoints.

    Returns (L1 error on oversampling*N equidistant points, status, cond, eps).
    """
    family = KernelFamily.parse(family)
    x = np.asarray(x, dtype=float)
    N = x.size
    if (N - 1) % (n - 1):
        raise ValueError(f"N-1={N - 1} is not a multiple of n-1={n - 1}")
    C = (N - 1) // (n - 1)
    idx = (n - 1) * np.arange(C)[:, None] + np.arange(n)
    clusters = x[idx]
    eps, _ = epsilons_for_stencils(strategy, clusters)
    Bs = augmented_matrices(clusters, family, eps)
    cond = frobenius_cond_batch(Bs)
    rhs = np.zeros((C, n + 1))
    rhs[:, :n] = fn(clusters)
    try:
        coef = np.linalg.solve(Bs, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return math.inf, "singular", cond, eps
    y = np.linspace(0.0, 1.0, oversampling * N)
    c = np.clip(np.searchsorted(clusters[:, 0], y, side="right") - 1, 0, C - 1)
    r = np.abs(y[:, None] - clusters[c])
    s = np.einsum("ij,ij->i", phi(family, eps[c][:, None], r), coef[c, :n]) + coef[c, n]
    exact = fn(y)
    if not np.all(np.isfinite(s)):
        return math.inf, "blowup", cond, eps
    err = float(np.mean(np.abs(s - exact)))
    status = "blowup" if np.max(np.abs(s)) > BLOWUP_FACTOR * np.max(np.abs(exact)) else "ok"
    return err, status, cond, eps


def interp_ladder_1d(kmax: int = 10, base: int = 10):
    return tuple((base - 1) * 2**k + 1 for k in range(kmax + 1))


def run_interp_1d(case: str, fn, strategy: ShapeStrategy, family, equidistant=True,
                  ladder=None, seed=JITTER_SEED):
    rows = []
    for N in ladder or interp_ladder_1d():
        t0 = time.perf_counter()
        x = ladder_points_1d(N, equidistant, seed)
        err, status, cond, eps = cluster_interpolation_1d(fn, x, strategy, family)
        rows.append(BenchRow(case, KernelFamily.parse(family).value, strategy.label, N, 4 * N,
                             None, err, _trio(cond), _trio(eps), status,
                             time.perf_counter() - t0))
    return rows


# -- 2D RBF-FD interpolation -------------------------------------------------------

def interpolation_2d(fn, n: int, strategy: ShapeStrategy, family=KernelFamily.IMQ, stencil_size=9):
    X = grid_points_2d(n)
    Y = grid_points_2d(2 * n)
    cfg = FdConfig(strategy, stencil_size, family, FdMode.OVERSAMPLED)
    op = assemble_global_operator(X, cfg, Y=Y, kind="interpolation")
    s = op.matrix @ fn(X)
    exact = fn(Y)
    st = op.stats()
    if not np.all(np.isfinite(s)):
        return math.inf, "blowup", st
    err = float(np.mean(np.abs(s - exact)))
    status = "blowup" if np.max(np.abs(s)) > BLOWUP_FACTOR * np.max(np.abs(exact)) else "ok"
    return err, status, st


def run_interp_2d(case: str, fn, strategy: ShapeStrategy, family, ladder=INTERP2D_LADDER):
    rows = []
    for n in ladder:
        t0 = time.perf_counter()
        try:
            err, status, st = interpolation_2d(fn, n, strategy, family)
            cond, eps = st["cond"], st["eps"]
        except NumericalError:
            err, status, cond, eps = math.inf, "singular", (math.inf,) * 3, (math.nan,) * 3
        rows.append(BenchRow(case, KernelFamily.parse(family).value, strategy.label, n * n,
                             4 * n * n, None, err, cond, eps, status, time.perf_counter() - t0))
    return rows


# -- PDE suites --------------------------------------------------------------------

def run_heat(ic: str, strategy: ShapeStrategy, family, equidistant=True, ladder=HEAT_LADDER,
             dt=1e-3, stencil_size=10, seed=JITTER_SEED, include_fdm=True):
    problem = HeatProblem(ic, dt)
    case = f"heat-{'quad' if problem.ic.value == 'quadratic' else 'sine'}-" \
           f"{'equi' if equidistant else 'nonequi'}"
    family = KernelFamily.parse(family)
    rows = []
    for N in ladder:
        x = ladder_points_1d(N, equidistant, seed)
        configs = [("fdm", FdmBaseline())] if include_fdm else []
        configs.append((strategy.label, FdConfig(strategy, stencil_size, family)))
        for label, cfg in configs:
            t0 = time.perf_counter()
            try:
                res = solve_heat_bdf2(problem, x, cfg)
                err, status, st = res.l1_error, res.status, res.stats
            except NumericalError:
                err, status, st = math.inf, "singular", {}
            rows.append(BenchRow(case, "none" if label == "fdm" else family.value, label, N, N,
                                 dt, err, st.get("cond", (math.nan,) * 3),
                                 st.get("eps", (math.nan,) * 3), status,
                                 time.perf_counter() - t0))
    return rows


def run_poisson(strategy: ShapeStrategy, family, ladder=POISSON_LADDER, stencil_size=9):
    family = KernelFamily.parse(family)
    problem = PoissonProblem2D()
    rows = []
    for n in ladder:
        t0 = time.perf_counter()
        try:
            res = solve_poisson_2d(problem, n, FdConfig(strategy, stencil_size, family))
            err, status, st = res.l1_error, res.status, res.stats
        except NumericalError:
            err, status, st = math.inf, "singular", {}
        rows.append(BenchRow("poisson2d", family.value, strategy.label, n * n, n * n, None, err,
                             st.get("cond", (math.nan,) * 3), st.get("eps", (math.nan,) * 3),
                             status, time.perf_counter() - t0))
    return rows


INTERP_CASES = {
    "f1-equi": ("1d", f1, True),
    "f1-nonequi": ("1d", f1, False),
    "f2-equi": ("1d", f2, True),
    "f2-nonequi": ("1d", f2, False),
    "interp2d-f3": ("2d", f3, None),
}


def resolve_interp_case(case: str):
    """Map a case id to (dimension, function, equidistant flag)."""
    if case in INTERP_CASES:
        return INTERP_CASES[case]
    prefix = "interp2d-f4-alpha"
    if case.startswith(prefix):
        alpha = float(case[len(prefix):])
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        return "2d", (lambda P, a=alpha: f4(P, a)), None
    raise ValueError(f"unknown case {case!r}; known: {', '.join(INTERP_CASES)}, "
                     f"{prefix}<alpha>")


def rows_as_dicts(rows):
    return [asdict(r) for r in rows]
