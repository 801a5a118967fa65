"""Condition-number band loss and its gradient through the epsilon bottleneck."""

from __future__ import annotations

import math

import numpy as np

from ..errors import NonFiniteGradient
from ..rbf_core import EPS_MAX, EPS_MIN, cond_for_stencils
from .model import backward, forward

# stand-in condition number for singular systems
COND_SATURATION = 1e16


def cost_single(cond, kappa=1.0, low=1e10, high=1e12, top=1e13, saturation=COND_SATURATION):
    """Piecewise log penalty, zero on (low, high], continuous at every knot.

    Works elementwise on arrays; returns a float for scalar input.
    Singular systems (cond = inf or NaN) are charged as ``saturation``.
    """
    c = np.asarray(cond, dtype=float)
    c = np.where(np.isfinite(c), c, saturation)
    out = np.zeros_like(c)
    below = c <= low
    ramp = (c > high) & (c <= top)
    above = c > top
    out[below] = 0.1 * np.log(low - c[below] + kappa)
    out[ramp] = np.log(top / (top - high) * (c[ramp] - high) + kappa)
    out[above] = np.log(c[above] + kappa)
    return float(out) if out.ndim == 0 else out


def _band_cost(cond, config):
    return cost_single(cond, config.kappa, *config.cond_thresholds)


def _cost_at(stencils, family, eps, config):
    cond = cond_for_stencils(stencils, family, eps)
    return _band_cost(cond, config), cond


def predict_raw(model, features):
    return forward(model, features)


def batch_cost(model, stencils, features, family, config, beta=None):
    """Mean band cost over the batch plus beta * ||W||^2."""
    beta = config.reg_beta if beta is None else beta
    eps = np.clip(forward(model, features), EPS_MIN, EPS_MAX)
    costs, _ = _cost_at(stencils, family, eps, config)
    return float(np.mean(costs)) + beta * model.squared_norm()


def eps_derivative(stencils, family, eps, config, rel_step=1e-4, abs_step=1e-7, cond=None):
    """Central difference of the cost with respect to epsilon, per sample.

    With ``cond`` (the condition numbers at ``eps``) samples deep inside the
    zero-cost band are skipped: a step this small moves cond by far less
    than a factor of two, so both sides cost zero there.
    """
    eps = np.asarray(eps, dtype=float)
    out = np.zeros(eps.shape)
    active = np.ones(eps.shape, dtype=bool)
    if cond is not None:
        low, high, _ = config.cond_thresholds
        active = ~((cond > 2.0 * low) & (cond < 0.5 * high))
    if not active.any():
        return out
    e = eps[active]
    st = np.asarray(stencils)[active]
    h = np.maximum(rel_step * e, abs_step)
    lower = np.maximum(e - h, EPS_MIN * 0.5)
    plus, _ = _cost_at(st, family, e + h, config)
    minus, _ = _cost_at(st, family, lower, config)
    out[active] = (plus - minus) / (e + h - lower)
    return out


def loss_and_gradient(model, stencils, features, family, config):
    """Minibatch loss and its gradient list (aligned with model.params()).

    dC_j/dW = (dC_j/d eps_j) (d eps_j/dW): the first factor by central
    differences in epsilon, the second by backpropagation. Clamped
    predictions get zero gradient.
    """
    out, *cache = forward(model, features, keep=True)
    cache = (out, *cache)
    inside = (out >= EPS_MIN) & (out <= EPS_MAX)
    eps = np.clip(out, EPS_MIN, EPS_MAX)
    costs, cond = _cost_at(stencils, family, eps, config)
    S = eps.shape[0]

    rel = 1e-4
    for attempt in range(2):
        dcost = eps_derivative(stencils, family, eps, config, rel_step=rel,
                               abs_step=1e-7 * rel / 1e-4, cond=cond)
        clip = getattr(config, "sensitivity_clip", None)
        if clip is not None:
            # the ramp above the upper knot is nearly a cliff; a difference
            # straddling it returns a spike that would swamp Adam's moments
            dcost = np.clip(dcost, -clip / eps, clip / eps)
        upstream = np.where(inside, dcost, 0.0) / S
        grads = backward(model, cache, upstream)
        grads = [g + 2.0 * config.reg_beta * p for g, p in zip(grads, model.params())]
        if all(np.all(np.isfinite(g)) for g in grads):
            break
        rel *= 0.5
    else:
        raise NonFiniteGradient("non-finite gradient after halving the finite-difference step")

    loss = float(np.mean(costs)) + config.reg_beta * model.squared_norm()
    if not math.isfinite(loss):
        raise NonFiniteGradient("non-finite minibatch loss")
    return loss, grads, cond
