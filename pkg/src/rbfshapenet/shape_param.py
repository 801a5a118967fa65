"""Shape-parameter strategies: constant, Hardy, Franke, modified Franke, neural."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import DegeneratePointSet, ModelMismatch
from .rbf_core import EPS_MAX, EPS_MIN, as_coords

HARDY_FACTOR = 0.815
FRANKE_FACTOR = 0.8
MFRANKE_EXPONENT = 0.25


class StrategyKind(str, enum.Enum):
    CONSTANT = "const"
    HARDY = "hardy"
    FRANKE = "franke"
    MODIFIED_FRANKE = "mfranke"
    NEURAL = "nn"


@dataclass(frozen=True)
class EpsReport:
    epsilon: float
    clamped: bool = False
    cond_estimate: float | None = None


@dataclass(frozen=True, eq=False)
class ShapeStrategy:
    kind: StrategyKind
    value: float | None = None        # constant epsilon
    exponent: float = MFRANKE_EXPONENT
    model: object = None              # MlpModel for the neural kind
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if self.kind is StrategyKind.CONSTANT:
            if self.value is None or not math.isfinite(self.value) or self.value <= 0:
                raise ValueError("constant epsilon must be a positive finite number")
        if self.kind is StrategyKind.NEURAL and self.model is None:
            raise ValueError("neural strategy needs a model")

    @property
    def per_stencil(self) -> bool:
        """Neural predictions depend on each stencil; the rest use the whole set."""
        return self.kind is StrategyKind.NEURAL

    @property
    def label(self) -> str:
        if self.kind is StrategyKind.CONSTANT:
            return f"const:{self.value:g}"
        if self.kind is StrategyKind.MODIFIED_FRANKE and self.exponent != MFRANKE_EXPONENT:
            return f"mfranke:exp={self.exponent:g}"
        if self.kind is StrategyKind.NEURAL:
            return "nn"
        return self.kind.value

    @classmethod
    def constant(cls, eps):
        return cls(StrategyKind.CONSTANT, value=float(eps))

    @classmethod
    def neural(cls, model, source=""):
        return cls(StrategyKind.NEURAL, model=model, source=str(source))


def parse_strategy(text: str) -> ShapeStrategy:
    """Parse ``const:<f>``, ``hardy``, ``franke``, ``mfranke[:exp=<f>]`` or ``nn:<path>``."""
    text = text.strip()
    head, _, rest = text.partition(":")
    head = head.lower()
    try:
        if head == "const":
            return ShapeStrategy.constant(float(rest))
        if head in ("hardy", "franke") and not rest:
            return ShapeStrategy(StrategyKind(head))
        if head == "mfranke":
            if not rest:
                return ShapeStrategy(StrategyKind.MODIFIED_FRANKE)
            key, _, val = rest.partition("=")
            if key.strip() != "exp":
                raise ValueError(f"unknown mfranke option {key!r}")
            return ShapeStrategy(StrategyKind.MODIFIED_FRANKE, exponent=float(val))
        if head == "nn" and rest:
            from .neural.io import load_model

            return ShapeStrategy.neural(load_model(Path(rest)), source=rest)
    except ValueError as exc:
        raise ValueError(f"bad strategy {text!r}: {exc}") from exc
    raise ValueError(f"bad strategy {text!r}; expected const:<f>, hardy, franke, "
                     "mfranke[:exp=<f>] or nn:<path>")


def clamp_report(eps, cond=None) -> EpsReport:
    eps = float(eps)
    clamped = not (EPS_MIN <= eps <= EPS_MAX)
    value = EPS_MIN if math.isnan(eps) else min(max(eps, EPS_MIN), EPS_MAX)
    return EpsReport(value, clamped, cond)


def _checked(points):
    P = as_coords(points)
    if P.shape[0] < 2:
        raise DegeneratePointSet("need at least two points")
    if not np.all(np.isfinite(P)):
        raise DegeneratePointSet("point coordinates must be finite")
    return P


def mean_nn_distance(points) -> float:
    P = _checked(points)
    d, _ = cKDTree(P).query(P, k=2)
    nn = d[:, 1]
    if np.any(nn == 0):
        raise DegeneratePointSet("coincident points (zero nearest-neighbour distance)")
    return float(nn.mean())


def hardy_eps(points) -> EpsReport:
    return clamp_report(1.0 / (HARDY_FACTOR * mean_nn_distance(points)))


def _circle_two(a, b):
    c = (a + b) / 2
    return c, float(np.hypot(*(a - c)))


def _circle_three(a, b, c):
    bx, by = b - a
    cx, cy = c - a
    d = 2 * (bx * cy - by * cx)
    if d == 0:
        # collinear: the farthest pair spans the circle
        pairs = [(a, b), (a, c), (b, c)]
        return max((_circle_two(p, q) for p, q in pairs), key=lambda t: t[1])
    ux = (cy * (bx * bx + by * by) - by * (cx * cx + cy * cy)) / d
    uy = (bx * (cx * cx + cy * cy) - cx * (bx * bx + by * by)) / d
    centre = a + np.array([ux, uy])
    return centre, float(np.hypot(ux, uy))


def _inside(circle, p, slack, tol=1e-12):
    c, r = circle
    return np.hypot(*(p - c)) <= r * (1 + tol) + slack


def min_enclosing_circle(points, seed=0):
    """Exact smallest enclosing circle (randomized incremental); returns (centre, radius)."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    if P.shape[0] > 3:
        try:
            P = P[ConvexHull(P).vertices]
        except QhullError:
            pass  # collinear or tiny sets; run on everything
    P = P[np.random.default_rng(seed).permutation(P.shape[0])]
    # absolute slack scaled to the point set, so tiny configurations still resolve
    slack = 1e-12 * float(np.max(np.ptp(P, axis=0)))
    circle = (P[0], 0.0)
    for i in range(1, P.shape[0]):
        if _inside(circle, P[i], slack):
            continue
        circle = (P[i], 0.0)
        for j in range(i):
            if _inside(circle, P[j], slack):
                continue
            circle = _circle_two(P[i], P[j])
            for k in range(j):
                if not _inside(circle, P[k], slack):
                    circle = _circle_three(P[i], P[j], P[k])
    return circle


def enclosing_diameter(points) -> float:
    P = _checked(points)
    if P.shape[1] == 1:
        D = float(P.max() - P.min())
    else:
        D = 2.0 * min_enclosing_circle(P)[1]
    if D == 0:
        raise DegeneratePointSet("all points coincide (zero diameter)")
    return D


def franke_eps(points) -> EpsReport:
    P = _checked(points)
    return clamp_report(FRANKE_FACTOR * math.sqrt(P.shape[0]) / enclosing_diameter(P))


def modified_franke_eps(points, exponent: float = MFRANKE_EXPONENT) -> EpsReport:
    P = _checked(points)
    return clamp_report(FRANKE_FACTOR * P.shape[0] ** exponent / enclosing_diameter(P))


def _check_model_fit(model, stencil):
    P = as_coords(stencil)
    if P.shape[1] != model.dim or P.shape[0] != model.stencil_size:
        raise ModelMismatch(
            f"model expects {model.stencil_size} points in {model.dim}D, "
            f"stencil has {P.shape[0]} in {P.shape[1]}D")


def epsilon_for_stencil(strategy: ShapeStrategy, stencil_points) -> EpsReport:
    kind = strategy.kind
    if kind is StrategyKind.CONSTANT:
        return clamp_report(strategy.value)
    if kind is StrategyKind.HARDY:
        return hardy_eps(stencil_points)
    if kind is StrategyKind.FRANKE:
        return franke_eps(stencil_points)
    if kind is StrategyKind.MODIFIED_FRANKE:
        return modified_franke_eps(stencil_points, strategy.exponent)
    from .neural.predict import predict_epsilon

    _check_model_fit(strategy.model, stencil_points)
    return clamp_report(predict_epsilon(strategy.model, stencil_points, clamp=False))


def epsilons_for_stencils(strategy: ShapeStrategy, stencils, all_points=None):
    """Per-stencil epsilon array and clamp flags for a stack of stencils.

    Non-neural strategies are evaluated once on ``all_points`` when given
    (a single global epsilon), otherwise per stencil.
    """
    stencils = [as_coords(s) for s in stencils] if not isinstance(stencils, np.ndarray) else stencils
    count = len(stencils)
    if strategy.kind is StrategyKind.NEURAL:
        from .neural.predict import predict_epsilons

        for s in stencils[:1]:
            _check_model_fit(strategy.model, s)
        raw = predict_epsilons(strategy.model, stencils, clamp=False)
        clamped = (raw < EPS_MIN) | (raw > EPS_MAX) | np.isnan(raw)
        return np.clip(np.nan_to_num(raw, nan=EPS_MIN), EPS_MIN, EPS_MAX), clamped
    if all_points is not None or strategy.kind is StrategyKind.CONSTANT:
        rep = epsilon_for_stencil(strategy, all_points if all_points is not None else stencils[0])
        return np.full(count, rep.epsilon), np.full(count, rep.clamped)
    reps = [epsilon_for_stencil(strategy, s) for s in stencils]
    return np.array([r.epsilon for r in reps]), np.array([r.clamped for r in reps])
