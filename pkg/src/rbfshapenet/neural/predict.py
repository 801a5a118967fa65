"""Shape-parameter prediction with a trained network."""

from __future__ import annotations

import numpy as np

from ..errors import ModelMismatch
from ..rbf_core import EPS_MAX, EPS_MIN
from .features import FeatureMode, raw_features
from .model import MlpModel, forward


def _as_stencil_stack(model: MlpModel, stencils):
    if isinstance(stencils, np.ndarray):
        X = stencils.astype(float, copy=False)
    else:
        X = np.asarray([np.asarray(s, dtype=float) for s in stencils])
    if model.dim == 1:
        if X.ndim == 3 and X.shape[-1] == 1:
            X = X[..., 0]
        if X.ndim == 1:
            X = X[None]
        # distance features take sorted gaps; coordinate features sort too
        X = np.sort(X, axis=1)
    elif X.ndim == 2:
        X = X[None]
    return X


def predict_epsilons(model: MlpModel, stencils, clamp: bool = True) -> np.ndarray:
    """Predicted epsilon for each stencil in a stack.

    2D distance features read the lattice spacings off each stencil, so
    edge and corner stencils that are subsets of the lattice are accepted.
    """
    X = _as_stencil_stack(model, stencils)
    spec = model.feature_spec
    if X.shape[1] != spec.stencil_size:
        raise ModelMismatch(f"model expects {spec.stencil_size}-point stencils, got {X.shape[1]}")
    strict = not (model.dim == 2 and spec.mode is FeatureMode.DISTANCE)
    eps = forward(model, spec.standardize(raw_features(X, spec, strict=strict)))
    return np.clip(eps, EPS_MIN, EPS_MAX) if clamp else eps


def predict_epsilon(model: MlpModel, stencil, clamp: bool = True) -> float:
    return float(predict_epsilons(model, [stencil], clamp=clamp)[0])
