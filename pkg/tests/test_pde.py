import math

import numpy as np
import pytest

from rbfshapenet.errors import LengthMismatch
from rbfshapenet.pde import (FdmBaseline, HeatProblem, PoissonProblem2D, boundary_mask_2d,
                             exact_heat, fdm_laplacian_1d, grid_points_2d, l1_error,
                             solve_heat_bdf2, solve_poisson_2d)
from rbfshapenet.rbf_fd import FdConfig
from rbfshapenet.shape_param import ShapeStrategy


def test_exact_quadratic_initial(frozen):
    p = HeatProblem("quadratic")
    assert exact_heat(p, 0.5, 0.0) == pytest.approx(0.25, abs=1e-10)
    assert frozen["heat_quad_x05_t0"] == pytest.approx(0.25, abs=1e-10)


def test_exact_quadratic_series(frozen):
    p = HeatProblem("quadratic")
    assert exact_heat(p, 0.5, 1e-3) == pytest.approx(frozen["heat_quad_x05_t0001"], abs=1e-10)
    assert exact_heat(p, 0.3, 0.1) == pytest.approx(frozen["heat_quad_x03_t01"], rel=1e-12)


def test_exact_sine():
    p = HeatProblem("sine")
    assert exact_heat(p, 0.5, 0.0) == 6.0
    assert exact_heat(p, 0.5, 1.0) == pytest.approx(6 * math.exp(-math.pi**2), rel=1e-14)


def test_exact_satisfies_boundary():
    for ic in ("quadratic", "sine"):
        p = HeatProblem(ic)
        for t in (0.0, 0.01, 0.5):
            assert np.abs(exact_heat(p, np.array([0.0, 1.0]), t)).max() < 1e-12


def test_problem_validation():
    with pytest.raises(ValueError):
        HeatProblem("quadratic", dt=0.3)
    with pytest.raises(ValueError):
        HeatProblem("cubic")


def test_l1_error():
    assert l1_error([1, 2, 3], [1, 2, 5]) == pytest.approx(2 / 3)
    with pytest.raises(LengthMismatch):
        l1_error([1, 2], [1, 2, 3])


def test_fdm_matrix_exact_on_quadratics():
    rng = np.random.default_rng(0)
    x = np.concatenate([[0], np.sort(rng.uniform(0.05, 0.95, 15)), [1]])
    L = fdm_laplacian_1d(x)
    assert (L @ (3 * x**2 - x))[1:-1] == pytest.approx(np.full(15, 6.0), rel=1e-9)


def test_fdm_quadratic_values():
    expected = [1.5283e-4, 4.1140e-5, 1.1150e-5]
    for N, want in zip((10, 19, 37), expected):
        x = np.linspace(0, 1, N)
        r = solve_heat_bdf2(HeatProblem("quadratic"), x, FdmBaseline())
        assert r.status == "ok"
        assert r.l1_error == pytest.approx(want, rel=5e-4)


def test_fdm_converges_second_order():
    errs = [solve_heat_bdf2(HeatProblem("sine"), np.linspace(0, 1, N), FdmBaseline()).l1_error
            for N in (10, 19, 37)]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 1.8)


def test_heat_requires_boundary_points():
    with pytest.raises(ValueError):
        solve_heat_bdf2(HeatProblem(), np.linspace(0.1, 1, 10), FdmBaseline())


def test_heat_rbf_fd_small_eps_blows_up():
    x = np.linspace(0, 1, 37)
    r = solve_heat_bdf2(HeatProblem("quadratic"), x, FdConfig(ShapeStrategy.constant(1.0)))
    assert r.status == "blowup" and math.isinf(r.l1_error)


def test_heat_rbf_fd_eps10_quadratic():
    x = np.linspace(0, 1, 19)
    r = solve_heat_bdf2(HeatProblem("quadratic"), x, FdConfig(ShapeStrategy.constant(10.0)))
    assert r.status == "ok"
    assert r.l1_error == pytest.approx(3.8622e-4, rel=1e-3)
    assert r.l1_error_final < r.l1_error * 10


def test_poisson_forcing_consistent():
    assert PoissonProblem2D().check_forcing() < 1e-8


def test_grid_layout():
    P = grid_points_2d(3)
    assert P[1].tolist() == [0.5, 0.0]
    assert P[3].tolist() == [0.0, 0.5]
    assert boundary_mask_2d(P).sum() == 8


@pytest.mark.parametrize("eps,n,want", [(10.0, 10, 1.4643e-1), (10.0, 40, 2.6150e-2),
                                        (1.0, 10, 3.8201e-3), (1.0, 20, 9.8806e-4)])
def test_poisson_reference_values(eps, n, want):
    cfg = FdConfig(ShapeStrategy.constant(eps), stencil_size=9)
    r = solve_poisson_2d(PoissonProblem2D(), n, cfg)
    assert r.status == "ok"
    assert r.l1_error == pytest.approx(want, rel=1e-3)


def test_poisson_boundary_values_injected():
    cfg = FdConfig(ShapeStrategy.constant(5.0), stencil_size=9)
    r = solve_poisson_2d(PoissonProblem2D(), 8, cfg)
    b = boundary_mask_2d(r.points)
    assert r.u[b] == pytest.approx(PoissonProblem2D.exact(r.points)[b], abs=1e-13)
