"""Dense ReLU network with a linear scalar output, plus hand-written backprop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch
from ..rbf_core import KernelFamily
from .features import FeatureSpec

SHIPPED_DIMS_1D = (9, 14, 8, 3, 1)
SHIPPED_DIMS_2D = (8, 16, 8, 3, 1)


@dataclass
class MlpModel:
    layer_dims: tuple
    weights: list
    biases: list
    feature_spec: FeatureSpec
    kernel_family: KernelFamily = KernelFamily.IMQ
    trained_cond_band: tuple = (1e10, 1e12)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        self.kernel_family = KernelFamily.parse(self.kernel_family)
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.biases = [np.asarray(b, dtype=float) for b in self.biases]
        dims = self.layer_dims
        if len(dims) < 2 or dims[-1] != 1:
            raise ShapeMismatch("network must end in a single output unit")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ShapeMismatch("need one weight matrix and bias per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ShapeMismatch(f"layer {i + 1} has shapes {w.shape}/{b.shape}, "
                                    f"expected {(dims[i + 1], dims[i])}/{(dims[i + 1],)}")
        if dims[0] != self.feature_spec.input_dim:
            raise ShapeMismatch("first layer width must equal the feature dimension")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.feature_spec.dim

    @property
    def stencil_size(self) -> int:
        return self.feature_spec.stencil_size

    def params(self):
        """Flat list [A_1, b_1, ..., A_p, b_p] (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MlpModel":
        return MlpModel(self.layer_dims, [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.feature_spec,
                        self.kernel_family, self.trained_cond_band, dict(self.provenance))

    def squared_norm(self) -> float:
        return float(sum(np.sum(p * p) for p in self.params()))


def init_model(layer_dims, feature_spec: FeatureSpec, kernel_family, rng,
               output_bias: float = 5.0) -> MlpModel:
    """He-uniform hidden layers, small uniform output layer, zero biases.

    The output bias starts positive so the first predictions are valid
    shape parameters.
    """
    dims = tuple(layer_dims)
    weights, biases = [], []
    for i in range(len(dims) - 1):
        fan_in = dims[i]
        last = i == len(dims) - 2
        limit = 1e-2 if last else np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(dims[i + 1], fan_in)))
        biases.append(np.zeros(dims[i + 1]))
    biases[-1][:] = output_bias
    return MlpModel(dims, weights, biases, feature_spec, kernel_family)


def forward(model: MlpModel, X, keep=False):
    """Batched forward pass; ``X`` has shape (S, d0). Returns (S,) outputs.

    With ``keep`` also returns the per-layer inputs and pre-activations
    needed by :func:`backward`.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.layer_dims[0]:
        raise ShapeMismatch(f"expected features of width {model.layer_dims[0]}, got {X.shape}")
    acts, pres = [X], []
    h = X
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w.T + b
        pres.append(z)
        h = z if i == model.n_layers - 1 else np.maximum(z, 0.0)
        acts.append(h)
    out = h[:, 0]
    return (out, acts, pres) if keep else out


def backward(model: MlpModel, cache, upstream):
    """Gradients of sum_j upstream_j * out_j w.r.t. every parameter.

    Returns a list aligned with :meth:`MlpModel.params`.
    """
    _, acts, pres = cache
    delta = np.asarray(upstream, dtype=float).reshape(-1, 1)
    grads = [None] * (2 * model.n_layers)
    for i in reversed(range(model.n_layers)):
        if i != model.n_layers - 1:
            delta = delta * (pres[i] > 0)
        grads[2 * i] = delta.T @ acts[i]
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = delta @ model.weights[i]
    return grads


def mlp_forward(model: MlpModel, features) -> float:
    """Network output for one feature vector."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 1:
        raise ShapeMismatch("mlp_forward takes a single feature vector")
    return float(forward(model, x[None, :])[0])
