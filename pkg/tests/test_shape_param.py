import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbfshapenet.errors import DegeneratePointSet
from rbfshapenet.rbf_core import EPS_MAX, EPS_MIN
from rbfshapenet.shape_param import (ShapeStrategy, StrategyKind, clamp_report,
                                     enclosing_diameter, epsilon_for_stencil,
                                     epsilons_for_stencils, franke_eps, hardy_eps,
                                     mean_nn_distance, min_enclosing_circle,
                                     modified_franke_eps, parse_strategy)


def test_hardy_values(frozen):
    assert hardy_eps(np.linspace(0, 1, 11)).epsilon == pytest.approx(frozen["hardy_11_equidistant"], rel=1e-12)
    assert hardy_eps([0.0, 1.0]).epsilon == pytest.approx(frozen["hardy_2_points"], rel=1e-12)


def test_franke_value(frozen):
    assert franke_eps(np.linspace(0, 1, 11)).epsilon == pytest.approx(frozen["franke_11_equidistant"], rel=1e-12)


def test_modified_franke_exponent():
    x = np.linspace(0, 2, 16)
    assert modified_franke_eps(x).epsilon == pytest.approx(0.8 * 16**0.25 / 2)
    assert modified_franke_eps(x, 0.5).epsilon == pytest.approx(franke_eps(x).epsilon)


def test_mean_nn_distance_nonuniform():
    assert mean_nn_distance([0.0, 0.1, 0.5]) == pytest.approx((0.1 + 0.1 + 0.4) / 3)


def test_degenerate_sets():
    with pytest.raises(DegeneratePointSet):
        hardy_eps([0.2, 0.2, 0.5])
    with pytest.raises(DegeneratePointSet):
        franke_eps([[0.1, 0.1], [0.1, 0.1]])
    with pytest.raises(DegeneratePointSet):
        hardy_eps([0.3])


def test_enclosing_circle_square():
    P = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5]], dtype=float)
    (cx, cy), r = min_enclosing_circle(P)
    assert (cx, cy) == pytest.approx((0.5, 0.5))
    assert r == pytest.approx(math.sqrt(0.5))


def test_enclosing_circle_collinear():
    P = np.array([[0, 0], [1, 1], [2, 2], [0.5, 0.5]], dtype=float)
    assert enclosing_diameter(P) == pytest.approx(2 * math.sqrt(2))


def test_enclosing_circle_obtuse_triangle():
    # the circumcircle is not minimal for an obtuse triangle
    P = np.array([[0, 0], [4, 0], [2, 0.5]])
    assert enclosing_diameter(P) == pytest.approx(4.0)


def test_enclosing_circle_tiny_scale():
    P = np.array([[0.0, 0.0], [0.0, 7.6e-56]])
    assert min_enclosing_circle(P)[1] == pytest.approx(3.8e-56)
    assert enclosing_diameter(np.array([[0, 0], [1e-14, 0], [0, 1e-14]])) == pytest.approx(math.sqrt(2) * 1e-14)


@settings(max_examples=60, deadline=None)
@given(pts=st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=30))
def test_enclosing_circle_contains_all(pts):
    P = np.array(pts)
    if np.ptp(P, axis=0).max() == 0:
        return
    (cx, cy), r = min_enclosing_circle(P)
    d = np.hypot(P[:, 0] - cx, P[:, 1] - cy)
    assert np.all(d <= r * (1 + 1e-9) + 1e-12)
    # never larger than the circle around the bounding box centre
    box = np.hypot(*np.ptp(P, axis=0)) / 2
    assert r <= box * (1 + 1e-9)
    # at least the farthest-pair half distance
    diam = np.max(np.linalg.norm(P[:, None] - P[None], axis=-1))
    assert r >= diam / 2 * (1 - 1e-9)


def test_clamping():
    rep = clamp_report(1e-9)
    assert rep.epsilon == EPS_MIN and rep.clamped
    rep = clamp_report(1e12)
    assert rep.epsilon == EPS_MAX and rep.clamped
    rep = clamp_report(float("nan"))
    assert rep.epsilon == EPS_MIN and rep.clamped
    assert not clamp_report(2.0).clamped


def test_parse_grammar():
    assert parse_strategy("const:2.5").value == 2.5
    assert parse_strategy("hardy").kind is StrategyKind.HARDY
    assert parse_strategy("franke").kind is StrategyKind.FRANKE
    s = parse_strategy("mfranke:exp=0.3")
    assert s.kind is StrategyKind.MODIFIED_FRANKE and s.exponent == 0.3
    assert parse_strategy("mfranke").label == "mfranke"
    assert s.label == "mfranke:exp=0.3"
    for bad in ("const:-1", "const:abc", "hardy:3", "mfranke:foo=1", "gauss", "nn"):
        with pytest.raises(ValueError):
            parse_strategy(bad)


def test_parse_missing_model_file(tmp_path):
    with pytest.raises(OSError):
        parse_strategy(f"nn:{tmp_path / 'missing.json'}")


def test_constant_strategy_broadcast():
    st_ = ShapeStrategy.constant(3.0)
    stencils = np.random.default_rng(0).uniform(size=(5, 10))
    eps, clamped = epsilons_for_stencils(st_, stencils)
    assert np.all(eps == 3.0) and not clamped.any()


def test_per_stencil_vs_global():
    x = np.linspace(0, 1, 41)
    stencils = np.stack([x[i:i + 10] for i in range(0, 31, 10)])
    per, _ = epsilons_for_stencils(ShapeStrategy(StrategyKind.HARDY), stencils)
    glob, _ = epsilons_for_stencils(ShapeStrategy(StrategyKind.HARDY), stencils, all_points=x)
    assert np.allclose(per, per[0])
    assert np.allclose(glob, hardy_eps(x).epsilon)
    assert epsilon_for_stencil(ShapeStrategy(StrategyKind.HARDY), stencils[0]).epsilon == per[0]


@settings(max_examples=40, deadline=None)
@given(scale=st.floats(1e-3, 1e3))
def test_heuristics_scale_inversely(scale):
    x = np.array([0.0, 0.1, 0.35, 0.4, 0.9])
    for fn in (hardy_eps, franke_eps, modified_franke_eps):
        e1 = fn(x).epsilon
        e2 = fn(x * scale).epsilon
        if EPS_MIN < e2 < EPS_MAX:
            assert e2 == pytest.approx(e1 / scale, rel=1e-9)
