"""Noise-prediction MLP for 1D signals with sinusoidal timestep embedding.

The network concatenates the noisy signal with a timestep embedding and
applies affine layers with SiLU between hidden layers (no activation on the
output). Gradients of the batch loss are computed by hand-written
reverse-mode passes so they can be validated against finite differences.
Everything runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .schedule import Schedule

__all__ = [
    "DenoiserParams",
    "Gradients",
    "DivergenceError",
    "time_embedding",
    "init_params",
    "forward",
    "forward_batch",
    "loss_and_grads",
]


class DivergenceError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class DenoiserParams:
    """MLP weights. Layer i maps dims[i] -> dims[i+1] via x @ W + b,
    where dims = (input_dim + embed_dim, *hidden_dims, input_dim)."""

    input_dim: int
    embed_dim: int
    hidden_dims: tuple[int, ...]
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)

    @property
    def total_param_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim + self.embed_dim, *self.hidden_dims, self.input_dim)

    def copy(self) -> "DenoiserParams":
        return DenoiserParams(self.input_dim, self.embed_dim, self.hidden_dims,
                              [w.copy() for w in self.weights],
                              [b.copy() for b in self.biases])


@dataclass
class Gradients:
    """Partials of the batch loss, shape-congruent with DenoiserParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


def _frequencies(embed_dim: int) -> np.ndarray:
    half = embed_dim // 2
    # geometric ladder from 1 down to 1/10000; a single pair uses frequency 1
    denom = max(half - 1, 1)
    return np.exp(-np.arange(half) * (np.log(10000.0) / denom))


def _embed_batch(ts: np.ndarray, embed_dim: int) -> np.ndarray:
    omega = _frequencies(embed_dim)
    ang = np.asarray(ts, dtype=np.float64)[:, None] * omega[None, :]
    emb = np.empty((len(ts), embed_dim))
    emb[:, 0::2] = np.sin(ang)
    emb[:, 1::2] = np.cos(ang)
    return emb


def time_embedding(t: int, T: int, embed_dim: int) -> np.ndarray:
    """Sinusoidal embedding: pair 2k holds (sin(t*w_k), cos(t*w_k))."""
    if embed_dim < 2 or embed_dim % 2 != 0:
        raise ValueError(f"embed_dim must be a positive even number, got {embed_dim}")
    if not 1 <= t <= T:
        raise ValueError(f"timestep {t} outside 1..{T}")
    return _embed_batch(np.array([t]), embed_dim)[0]


def init_params(input_dim: int, embed_dim: int, hidden_dims,
                seed: int) -> DenoiserParams:
    """Fan-in scaled Gaussian weights (variance 1/fan_in), zero biases."""
    if embed_dim < 2 or embed_dim % 2 != 0:
        raise ValueError(f"embed_dim must be a positive even number, got {embed_dim}")
    hidden_dims = tuple(int(h) for h in hidden_dims)
    if input_dim < 1 or any(h < 1 for h in hidden_dims):
        raise ValueError("all layer widths must be positive")
    rng = np.random.default_rng(seed)
    dims = (input_dim + embed_dim, *hidden_dims, input_dim)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return DenoiserParams(int(input_dim), int(embed_dim), hidden_dims,
                          weights, biases)


def _silu(z: np.ndarray) -> np.ndarray:
    return z * expit(z)


def _silu_grad(z: np.ndarray) -> np.ndarray:
    s = expit(z)
    return s * (1.0 + z * (1.0 - s))


def _forward_cached(params: DenoiserParams, X: np.ndarray):
    acts = [X]       # layer inputs
    pre = []         # pre-activations of hidden layers
    a = X
    n_layers = len(params.weights)
    for i in range(n_layers - 1):
        z = a @ params.weights[i] + params.biases[i]
        pre.append(z)
        a = _silu(z)
        acts.append(a)
    out = a @ params.weights[-1] + params.biases[-1]
    return out, acts, pre


def forward_batch(params: DenoiserParams, X_t: np.ndarray,
                  ts: np.ndarray) -> np.ndarray:
    """Predict the injected noise for a batch of noisy signals.

    X_t has shape [B, input_dim]; ts is a length-B vector of timesteps.
    """
    X_t = np.asarray(X_t, dtype=np.float64)
    if X_t.ndim != 2 or X_t.shape[1] != params.input_dim:
        raise ValueError(f"X_t must be [B, {params.input_dim}], got {X_t.shape}")
    emb = _embed_batch(np.asarray(ts), params.embed_dim)
    out, _, _ = _forward_cached(params, np.concatenate([X_t, emb], axis=1))
    return out


def forward(params: DenoiserParams, x_t: np.ndarray, t: int) -> np.ndarray:
    """Single-signal forward pass."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape != (params.input_dim,):
        raise ValueError(
            f"x_t must have shape ({params.input_dim},), got {x_t.shape}")
    return forward_batch(params, x_t[None, :], np.array([t]))[0]


def loss_and_grads(params: DenoiserParams, batch, schedule: Schedule):
    """Mean squared noise-prediction error and its exact parameter gradients.

    batch is a triple (x0s, ts, epss): clean signals [B, D], timesteps [B],
    and noise draws [B, D]. The loss is the batch mean of the squared L2
    error ||eps - net(diffuse(x0, t, eps), t)||^2.

    Raises:
        DivergenceError: if the loss evaluates to a non-finite value.
    """
    x0s, ts, epss = batch
    x0s = np.asarray(x0s, dtype=np.float64)
    epss = np.asarray(epss, dtype=np.float64)
    ts = np.asarray(ts)
    if x0s.ndim != 2 or x0s.shape[0] == 0:
        raise ValueError("batch must be nonempty with 2D signal array")
    if x0s.shape != epss.shape or x0s.shape[1] != params.input_dim:
        raise ValueError(
            f"batch shapes {x0s.shape}/{epss.shape} incompatible with "
            f"input_dim {params.input_dim}")
    B = x0s.shape[0]
    idx = ts - 1
    sc = schedule.signal_coefs[idx][:, None]
    sg = schedule.sigmas[idx][:, None]
    X_t = sc * x0s + sg * epss

    emb = _embed_batch(ts, params.embed_dim)
    X = np.concatenate([X_t, emb], axis=1)
    out, acts, pre = _forward_cached(params, X)

    resid = out - epss
    loss = float(np.mean(np.sum(resid * resid, axis=1)))
    if not np.isfinite(loss):
        raise DivergenceError("loss is non-finite")

    n_layers = len(params.weights)
    gw = [np.empty(0)] * n_layers
    gb = [np.empty(0)] * n_layers
    d = 2.0 * resid / B
    for i in range(n_layers - 1, -1, -1):
        gw[i] = acts[i].T @ d
        gb[i] = d.sum(axis=0)
        if i > 0:
            d = (d @ params.weights[i].T) * _silu_grad(pre[i - 1])
    return loss, Gradients(gw, gb)
