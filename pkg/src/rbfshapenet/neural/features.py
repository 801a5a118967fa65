"""Feature pipelines that turn a stencil into a network input vector.

Inference always applies x' = (x - norm_mean) / norm_var. How the two
vectors are fitted is selectable: "variance" stores the empirical mean and
variance, "std" the mean and standard deviation,
"robust" the median and interquartile range. Inverse gaps are heavy-tailed,
so the moment-based choices squash typical samples towards zero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import ModelMismatch, ShapeMismatch, ZeroGap


class FeatureMode(str, enum.Enum):
    DISTANCE = "distance"
    COORDINATE = "coordinate"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        return cls({"dist": "distance", "coord": "coordinate"}.get(key, key))


def input_dim(dim: int, mode, n: int) -> int:
    mode = FeatureMode.parse(mode)
    if dim == 1:
        return n - 1 if mode is FeatureMode.DISTANCE else n
    if dim == 2:
        if mode is FeatureMode.DISTANCE:
            if n != 9:
                raise ValueError("2D distance features are defined for the 3x3 (n=9) stencil only")
            return 8
        return 2 * n
    raise ValueError(f"unsupported dimension {dim}")


@dataclass
class FeatureSpec:
    dim: int
    mode: FeatureMode
    stencil_size: int
    mean: np.ndarray | None = None
    var: np.ndarray | None = None

    def __post_init__(self):
        self.mode = FeatureMode.parse(self.mode)
        if self.mean is not None:
            self.mean = np.asarray(self.mean, dtype=float)
            self.var = np.asarray(self.var, dtype=float)
            if self.mean.shape != (self.input_dim,) or self.var.shape != (self.input_dim,):
                raise ShapeMismatch("normalization statistics must have one entry per feature")
            if np.any(self.var <= 0):
                raise ValueError("feature variances must be positive")

    @property
    def input_dim(self) -> int:
        return input_dim(self.dim, self.mode, self.stencil_size)

    @property
    def fitted(self) -> bool:
        return self.mean is not None

    def fit(self, raw, method: str = "variance") -> "FeatureSpec":
        raw = np.asarray(raw, dtype=float)
        if method == "variance":
            centre, scale = raw.mean(axis=0), raw.var(axis=0)
        elif method == "std":
            centre, scale = raw.mean(axis=0), raw.std(axis=0)
        elif method == "robust":
            q25, centre, q75 = np.percentile(raw, [25, 50, 75], axis=0)
            scale = q75 - q25
        else:
            raise ValueError(f"unknown normalization method {method!r}")
        # a constant feature would divide by zero; leave it unscaled
        scale = np.where(scale > 0, scale, 1.0)
        return FeatureSpec(self.dim, self.mode, self.stencil_size, centre, scale)

    def standardize(self, raw):
        if not self.fitted:
            raise ValueError("feature statistics have not been fitted")
        return (np.asarray(raw, dtype=float) - self.mean) / self.var


def _stencil_array(stencils, spec: FeatureSpec):
    X = np.asarray(stencils, dtype=float)
    if spec.dim == 1 and X.ndim == 3 and X.shape[-1] == 1:
        X = X[..., 0]
    single = X.ndim == (1 if spec.dim == 1 else 2)
    if single:
        X = X[None]
    expected = (spec.stencil_size,) if spec.dim == 1 else (spec.stencil_size, 2)
    if X.shape[1:] != expected:
        raise ModelMismatch(
            f"stencil of shape {X.shape[1:]} does not match the model's {expected}")
    return X, single


def raw_gap_features(stencils):
    """Inverse consecutive gaps of sorted 1D stencils, shape (S, n-1)."""
    X = np.sort(np.asarray(stencils, dtype=float), axis=-1)
    gaps = np.diff(X, axis=-1)
    if np.any(gaps <= 0):
        raise ZeroGap("stencil has coincident points (zero gap)")
    return 1.0 / gaps


def structured_distances(dx, dy):
    """The eight characteristic distances of a 3x3 structured stencil."""
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    return np.stack([
        dy,
        2 * dy,
        dx,
        np.sqrt(dx**2 + dy**2),
        np.sqrt(dx**2 + (2 * dy) ** 2),
        2 * dx,
        np.sqrt((2 * dx) ** 2 + dy**2),
        2 * np.sqrt(dx**2 + dy**2),
    ], axis=-1)


def raw_structured_features(dx, dy):
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    if np.any(dx <= 0) or np.any(dy <= 0):
        raise ZeroGap("structured stencil spacings must be positive")
    return 1.0 / structured_distances(dx, dy)


def structured_spacing(stencil, strict: bool = True, tol: float = 1e-12):
    """Lattice spacings (dx, dy) of a structured 2D stencil.

    With ``strict`` the stencil must be a full 3x3 tensor grid. Otherwise
    any subset of a rectangular lattice with at least two distinct
    abscissae and ordinates is accepted (edge and corner stencils).
    Coordinates must sit on the lattice to within ``tol``.
    """
    P = np.asarray(stencil, dtype=float).reshape(-1, 2)
    spacing = []
    for axis in range(2):
        vals = np.sort(P[:, axis])
        levels = [vals[0]]
        for v in vals[1:]:
            if v - levels[-1] > tol:
                levels.append(v)
        levels = np.asarray(levels)
        if levels.size < 2:
            raise ModelMismatch("stencil is not structured: all points share a coordinate")
        if strict and levels.size != 3:
            raise ModelMismatch("stencil is not a 3x3 structured pattern")
        step = float(np.min(np.diff(levels)))
        k = (P[:, axis] - levels[0]) / step
        if np.max(np.abs(k - np.round(k))) * step > tol:
            raise ModelMismatch("stencil points are not on a rectangular lattice")
        spacing.append(step)
    if strict:
        ij = {(round((p[0] - P[:, 0].min()) / spacing[0]), round((p[1] - P[:, 1].min()) / spacing[1]))
              for p in P}
        if len(ij) != 9 or P.shape[0] != 9:
            raise ModelMismatch("stencil is not a 3x3 structured pattern")
    return spacing[0], spacing[1]


def raw_features(stencils, spec: FeatureSpec, strict: bool = True):
    """Un-normalized features for a stencil or a stack of stencils."""
    X, single = _stencil_array(stencils, spec)
    if spec.dim == 1:
        if spec.mode is FeatureMode.DISTANCE:
            raw = raw_gap_features(X)
        else:
            raw = np.sort(X, axis=-1)
    elif spec.mode is FeatureMode.DISTANCE:
        sp = np.array([structured_spacing(s, strict=strict) for s in X])
        raw = raw_structured_features(sp[:, 0], sp[:, 1])
    else:
        order = np.lexsort((X[:, :, 0], X[:, :, 1]), axis=-1)
        Xs = np.take_along_axis(X, order[..., None], axis=1)
        centred = Xs - Xs.mean(axis=1, keepdims=True)
        raw = np.concatenate([centred[:, :, 0], centred[:, :, 1]], axis=1)
    return raw[0] if single else raw


def stencil_features(stencils, spec: FeatureSpec, strict: bool = True):
    return spec.standardize(raw_features(stencils, spec, strict=strict))


def features_1d_distance(stencil, spec: FeatureSpec):
    x = np.asarray(stencil, dtype=float).reshape(-1)
    if np.any(np.diff(x) < 0):
        raise ValueError("1D stencil must be sorted ascending")
    return spec.standardize(raw_gap_features(x))


def features_1d_coordinate(stencil, spec: FeatureSpec):
    return spec.standardize(np.asarray(stencil, dtype=float).reshape(-1))


def features_2d_structured(dx, dy, spec: FeatureSpec):
    return spec.standardize(raw_structured_features(dx, dy))
