"""Float64 numeric core: activations, initialisers, Adam, gradient checking.

Trainable parameters are plain ``{name: ndarray}`` dicts throughout the
package; everything in this module treats them uniformly and never mutates
its inputs (``grad_check`` perturbs in place but always restores).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NumericalError

__all__ = [
    "AdamState",
    "adam_init",
    "adam_step",
    "glorot_uniform",
    "grad_check",
    "make_rng",
    "relu",
    "sigmoid",
]


def make_rng(seed):
    """Return a seeded PCG64 generator.

    PCG64 streams are platform-stable, so every stochastic step in the
    package (init, shuffling, synthetic data) reproduces exactly from the
    run seed.
    """
    return np.random.Generator(np.random.PCG64(seed))


def sigmoid(x):
    """Elementwise logistic function 1/(1+e^-x), stable for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    neg = x < 0.0
    e = np.exp(np.where(neg, x, -x))  # argument is always <= 0
    return np.where(neg, e / (1.0 + e), 1.0 / (1.0 + e))


def relu(x):
    return np.maximum(x, 0.0)


def glorot_uniform(rng, shape):
    """Uniform init in +-sqrt(6/(fan_in+fan_out)) for a 2-d weight."""
    fan_in, fan_out = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class AdamState:
    """Optimizer state; moments mirror the parameter dict shapes."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_init(params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
    """Zero-moment Adam state shaped like ``params``."""
    if lr < 0.0:
        raise ConfigError(f"learning rate must be >= 0, got {lr}")
    if not (0.0 < beta1 < 1.0 and 0.0 < beta2 < 1.0):
        raise ConfigError("Adam betas must lie in (0, 1)")
    if eps <= 0.0:
        raise ConfigError("Adam eps must be positive")
    return AdamState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        step_count=0,
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
    )


def adam_step(params, grads, state):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``.

    Inputs are left untouched, so a caller can retain old parameters (e.g.
    for best-checkpoint tracking) without copying.
    """
    if set(params) != set(grads):
        raise ConfigError("gradient names do not match parameter names")
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_p, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ConfigError(
                f"gradient shape {g.shape} != parameter shape {p.shape} for {name!r}"
            )
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * (g * g)
        new_p[name] = p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        new_m[name] = m
        new_v[name] = v
    return new_p, replace(state, step_count=t, m=new_m, v=new_v)


def grad_check(loss_and_grads, params, eps=1e-5):
    """Compare analytic gradients against central finite differences.

    ``loss_and_grads(params)`` must return ``(loss, grads)`` with ``grads``
    shaped like ``params``. Each scalar is perturbed by +-eps in turn; the
    error for one parameter array is

        ||g_analytic - g_numeric|| / max(||g_analytic|| + ||g_numeric||, 1e-12)

    and the worst array-level error is returned.
    """
    loss, analytic = loss_and_grads(params)
    if not np.isfinite(loss):
        raise NumericalError(f"loss is not finite at the checked point: {loss}")
    worst = 0.0
    for name, value in params.items():
        flat = value.reshape(-1)  # view: perturb in place, then restore
        numeric = np.empty(flat.shape)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + eps
            hi, _ = loss_and_grads(params)
            flat[k] = orig - eps
            lo, _ = loss_and_grads(params)
            flat[k] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise NumericalError(f"non-finite loss while perturbing {name!r}")
            numeric[k] = (hi - lo) / (2.0 * eps)
        ga = np.asarray(analytic[name], dtype=np.float64).reshape(-1)
        denom = max(np.linalg.norm(ga) + np.linalg.norm(numeric), 1e-12)
        worst = max(worst, float(np.linalg.norm(ga - numeric) / denom))
    return worst
