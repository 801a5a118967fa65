"""Dataset generation and minibatch training with early stopping."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..rbf_core import EPS_MAX, EPS_MIN, KernelFamily, cond_for_stencils
from .cost import cost_single, loss_and_gradient
from .features import FeatureMode, FeatureSpec, raw_features
from .model import MlpModel, forward, init_model

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    reg_beta: float = 1e-5
    batch_size: int = 500
    patience: int = 3000
    max_epochs: int = 15000
    train_samples: int = 4400
    valid_samples: int = 1100
    cond_thresholds: tuple = (1e10, 1e12, 1e13)
    kappa: float = 1.0
    rng_seed: int = 42
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    # None: choose the bias so the median training cond sits at the band centre
    output_bias: float | None = None
    # 2D: stop once the median validation cond lands in this window
    median_cond_stop: tuple | None = None
    struct_range: tuple = (0.01, 1.0)
    feature_norm: str = "robust"
    # bound on |eps * dC/deps| per sample; None disables clipping
    sensitivity_clip: float | None = 1.0
    # geometric learning-rate decay reaching this value at max_epochs; None keeps it fixed
    final_learning_rate: float | None = None
    # per-epoch exponential moving average of the weights; validation, early
    # stopping and the returned model use the average. None disables it.
    ema_decay: float | None = 0.99

    def __post_init__(self):
        self.cond_thresholds = tuple(float(t) for t in self.cond_thresholds)
        lo, hi, top = self.cond_thresholds
        if not lo < hi < top:
            raise ValueError("condition-number thresholds must be strictly increasing")
        for name in ("learning_rate", "batch_size", "patience", "max_epochs",
                     "train_samples", "valid_samples", "kappa"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.final_learning_rate is not None and self.final_learning_rate <= 0:
            raise ValueError("final_learning_rate must be positive")
        if self.ema_decay is not None and not 0.0 <= self.ema_decay < 1.0:
            raise ValueError("ema_decay must lie in [0, 1)")
        if self.reg_beta < 0:
            raise ValueError("reg_beta must be non-negative")

    def to_dict(self):
        d = asdict(self)
        d["cond_thresholds"] = list(self.cond_thresholds)
        if self.median_cond_stop is not None:
            d["median_cond_stop"] = list(self.median_cond_stop)
        d["struct_range"] = list(self.struct_range)
        return d


@dataclass
class Dataset:
    stencils: np.ndarray   # raw coordinates, (S, n) in 1D or (S, n, 2) in 2D
    features: np.ndarray   # standardized network inputs, (S, d0)

    def __len__(self):
        return self.stencils.shape[0]

    def subset(self, idx):
        return Dataset(self.stencils[idx], self.features[idx])


@dataclass
class TrainTrace:
    train_loss: list = field(default_factory=list)
    valid_loss: list = field(default_factory=list)
    valid_median_cond: list = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: str = ""

    @property
    def epochs(self):
        return len(self.valid_loss)


def structured_stencils(dx, dy):
    """3x3 tensor-grid stencils with spacings (dx, dy), shape (S, 9, 2)."""
    dx = np.atleast_1d(np.asarray(dx, dtype=float))
    dy = np.atleast_1d(np.asarray(dy, dtype=float))
    j, i = np.meshgrid(np.arange(3), np.arange(3), indexing="ij")
    i = i.ravel().astype(float)
    j = j.ravel().astype(float)
    return np.stack([dx[:, None] * i, dy[:, None] * j], axis=-1)


def sample_stencils(rng, count, spec: FeatureSpec, struct_range=(0.01, 1.0)):
    if spec.dim == 1:
        return np.sort(rng.uniform(0.0, 1.0, size=(count, spec.stencil_size)), axis=1)
    if spec.stencil_size != 9:
        raise ValueError("2D samples are 3x3 structured stencils (n=9)")
    ab = rng.uniform(struct_range[0], struct_range[1], size=(count, 2))
    return structured_stencils(ab[:, 1] / 2, ab[:, 0] / 2)


def generate_dataset(config: TrainConfig, feature_spec: FeatureSpec):
    """Draw train then validation stencils and fit feature statistics.

    Statistics come from the training split only.
    """
    rng = np.random.default_rng(config.rng_seed)
    train_st = sample_stencils(rng, config.train_samples, feature_spec, config.struct_range)
    valid_st = sample_stencils(rng, config.valid_samples, feature_spec, config.struct_range)
    spec = feature_spec.fit(raw_features(train_st, feature_spec), config.feature_norm)
    train = Dataset(train_st, spec.standardize(raw_features(train_st, spec)))
    valid = Dataset(valid_st, spec.standardize(raw_features(valid_st, spec)))
    return train, valid, spec


def datasets_from_stencils(train_st, valid_st, spec: FeatureSpec):
    """Rebuild datasets from raw stencils using an already fitted spec."""
    return (Dataset(train_st, spec.standardize(raw_features(train_st, spec))),
            Dataset(valid_st, spec.standardize(raw_features(valid_st, spec))))


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def grad_step(model: MlpModel, batch: Dataset, config: TrainConfig, optimizer: Adam):
    """One optimizer update on ``batch``; returns (model, loss before the update)."""
    loss, grads, _ = loss_and_gradient(model, batch.stencils, batch.features,
                                       model.kernel_family, config)
    optimizer.step(model.params(), grads)
    return model, loss


def predict_eps(model: MlpModel, data: Dataset):
    return np.clip(forward(model, data.features), EPS_MIN, EPS_MAX)


def validation_loss(model: MlpModel, data: Dataset, config: TrainConfig):
    """Pure data term (no regularizer) and the per-sample condition numbers."""
    cond = cond_for_stencils(data.stencils, model.kernel_family, predict_eps(model, data))
    costs = cost_single(cond, config.kappa, *config.cond_thresholds)
    return float(np.mean(costs)), cond


class EarlyStopping:
    """Patience bookkeeping; epochs are numbered from 1."""

    def __init__(self, patience):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.wait = 0

    def update(self, epoch, value) -> tuple[bool, bool]:
        """Returns (improved, should_stop)."""
        if value < self.best:
            self.best, self.best_epoch, self.wait = value, epoch, 0
            return True, False
        self.wait += 1
        return False, self.wait >= self.patience


def train(model: MlpModel, train_set: Dataset, valid_set: Dataset, config: TrainConfig,
          log_every: int = 0):
    """Minibatch Adam with early stopping; returns (best model, trace)."""
    model = model.copy()
    rng = np.random.default_rng([config.rng_seed, 2])
    opt = Adam(model.params(), config.learning_rate, config.adam_beta1,
               config.adam_beta2, config.adam_eps)
    stopper = EarlyStopping(config.patience)
    trace = TrainTrace()
    best = model.copy()
    avg = model.copy() if config.ema_decay is not None else None
    S = len(train_set)

    decay = 1.0
    if config.final_learning_rate is not None and config.max_epochs > 1:
        decay = (config.final_learning_rate / config.learning_rate) ** (1.0 / (config.max_epochs - 1))

    for epoch in range(1, config.max_epochs + 1):
        opt.lr = config.learning_rate * decay ** (epoch - 1)
        perm = rng.permutation(S)
        total = 0.0
        for start in range(0, S, config.batch_size):
            idx = perm[start:start + config.batch_size]
            _, loss = grad_step(model, train_set.subset(idx), config, opt)
            total += loss * idx.size
        current = model
        if avg is not None:
            d = config.ema_decay
            for a, p in zip(avg.params(), model.params()):
                a *= d
                a += (1.0 - d) * p
            current = avg
        vloss, vcond = validation_loss(current, valid_set, config)
        med = float(np.median(vcond))
        trace.train_loss.append(total / S)
        trace.valid_loss.append(vloss)
        trace.valid_median_cond.append(med)
        improved, stop = stopper.update(epoch, vloss)
        if improved:
            best = current.copy()
        if log_every and epoch % log_every == 0:
            logger.info("epoch %d train %.5g valid %.5g median cond %.3g",
                        epoch, trace.train_loss[-1], vloss, med)
        if config.median_cond_stop is not None:
            lo, hi = config.median_cond_stop
            if lo <= med <= hi:
                best = current.copy()
                stopper.best_epoch = epoch
                trace.stop_reason = "median_cond"
                break
        if stop:
            trace.stop_reason = "patience"
            break
    else:
        trace.stop_reason = "max_epochs"

    trace.best_epoch = stopper.best_epoch
    best.provenance = {"train_config": config.to_dict(), "best_epoch": trace.best_epoch,
                       "epochs_run": trace.epochs, "stop_reason": trace.stop_reason}
    best.trained_cond_band = tuple(config.cond_thresholds[:2])
    return best, trace


def median_cond_eps(stencils, family, target, lo=1e-3, hi=1e4, iters=60):
    """Common epsilon whose median condition number over ``stencils`` is ``target``.

    Bisection in log(eps); cond decreases with eps over the range of interest.
    """
    a, b = math.log(lo), math.log(hi)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        med = np.median(cond_for_stencils(stencils, family, math.exp(mid)))
        if med > target:
            a = mid
        else:
            b = mid
    return math.exp(0.5 * (a + b))


def new_model(spec: FeatureSpec, family, config: TrainConfig, layer_dims=None,
              train_set: Dataset | None = None):
    from .model import SHIPPED_DIMS_1D, SHIPPED_DIMS_2D

    if layer_dims is None:
        hidden = SHIPPED_DIMS_1D[1:] if spec.dim == 1 else SHIPPED_DIMS_2D[1:]
        layer_dims = (spec.input_dim, *hidden)
    family = KernelFamily.parse(family)
    bias = config.output_bias
    if bias is None:
        if train_set is None:
            raise ValueError("a data-driven output bias needs the training set")
        lo, hi, _ = config.cond_thresholds
        bias = median_cond_eps(train_set.stencils[:500], family, math.sqrt(lo * hi))
    rng = np.random.default_rng([config.rng_seed, 1])
    return init_model(layer_dims, spec, family, rng, bias)


def default_feature_spec(dim: int, mode=FeatureMode.DISTANCE, n=None):
    n = n if n is not None else (10 if dim == 1 else 9)
    return FeatureSpec(dim, mode, n)
