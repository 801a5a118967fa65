"""Model and dataset files.

Models are JSON documents. Floats are written with ``repr`` so every value
round-trips bit-exactly through ``float()``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import CorruptModel, ModelFormatError, SchemaVersionMismatch
from .features import FeatureSpec
from .model import MlpModel

SCHEMA_VERSION = 1


def model_to_dict(model: MlpModel) -> dict:
    spec = model.feature_spec
    if not spec.fitted:
        raise ValueError("cannot serialize a model without normalization statistics")
    return {
        "schema_version": SCHEMA_VERSION,
        "dim": spec.dim,
        "feature_mode": spec.mode.value,
        "stencil_size": spec.stencil_size,
        "kernel_family": model.kernel_family.value,
        "layer_dims": list(model.layer_dims),
        "activations": ["relu"] * (model.n_layers - 1) + ["linear"],
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "norm_mean": spec.mean.tolist(),
        "norm_var": spec.var.tolist(),
        "trained_cond_band": list(model.trained_cond_band),
        "provenance": model.provenance,
    }


def model_from_dict(doc: dict) -> MlpModel:
    if not isinstance(doc, dict):
        raise CorruptModel("model document must be a mapping")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"unsupported schema_version {version!r}")
    try:
        dims = [int(d) for d in doc["layer_dims"]]
        if not dims or dims[-1] != 1:
            raise SchemaVersionMismatch("network output width must be 1")
        spec = FeatureSpec(int(doc["dim"]), doc["feature_mode"], int(doc["stencil_size"]),
                           np.array(doc["norm_mean"], dtype=float),
                           np.array(doc["norm_var"], dtype=float))
        return MlpModel(dims, [np.array(w, dtype=float) for w in doc["weights"]],
                        [np.array(b, dtype=float) for b in doc["biases"]], spec,
                        doc["kernel_family"], tuple(doc.get("trained_cond_band", (1e10, 1e12))),
                        dict(doc.get("provenance", {})))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"malformed model document: {exc}") from exc


def save_model(model: MlpModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model), sort_keys=True, indent=1) + "\n")
    return path


def load_model(path) -> MlpModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"{path}: not a valid model file ({exc})") from exc
    return model_from_dict(doc)


def save_dataset(path, stencils):
    """One stencil per line, raw coordinates (x1 y1 x2 y2 ... in 2D)."""
    X = np.asarray(stencils, dtype=float)
    flat = X.reshape(X.shape[0], -1)
    header = f"dim={1 if X.ndim == 2 else X.shape[-1]} n={X.shape[1]}"
    np.savetxt(path, flat, fmt="%.17g", header=header)


def load_dataset(path):
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
    meta = dict(tok.split("=") for tok in first.lstrip("# ").split())
    dim, n = int(meta["dim"]), int(meta["n"])
    flat = np.loadtxt(path, ndmin=2)
    return flat if dim == 1 else flat.reshape(-1, n, dim)
