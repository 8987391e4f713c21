"""DDPM training loop with pluggable timestep sampling.

The intervention point is the distribution timesteps are drawn from: the
baseline uses the exact-uniform pmf, memorization control swaps in a
CI-derived mixture pmf. Per-sample timesteps and noise are drawn from a
single seeded generator in a fixed order, so runs are bit-reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .network import DenoiserParams, DivergenceError, Gradients, init_params, loss_and_grads
from .schedule import Schedule
from .timesteps import CIConfig, TimestepPMF, pmf_from_ci, sample_timesteps, uniform_pmf

__all__ = [
    "AdamSettings",
    "TrainConfig",
    "TrainReport",
    "train",
    "pretrain_then_finetune",
]


@dataclass(frozen=True)
class AdamSettings:
    """Adaptive-moment estimation hyperparameters."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class TrainConfig:
    epochs: int
    learning_rate: float
    batch_size: int = 64
    ci: CIConfig | None = None       # None -> uniform timestep sampling
    seed: int = 0
    checkpoint_every: int = 0        # epochs between checkpoints; 0 = final only
    adam: AdamSettings = field(default_factory=AdamSettings)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        # learning_rate 0 is allowed: a no-op run is useful for testing
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")


@dataclass
class TrainReport:
    epoch_losses: np.ndarray          # mean batch loss per epoch
    timestep_histogram: np.ndarray    # draws of each t over the whole run
    wall_time: float


class _Adam:
    def __init__(self, params: DenoiserParams, settings: AdamSettings):
        self.s = settings
        self.t = 0
        self.mw = [np.zeros_like(w) for w in params.weights]
        self.vw = [np.zeros_like(w) for w in params.weights]
        self.mb = [np.zeros_like(b) for b in params.biases]
        self.vb = [np.zeros_like(b) for b in params.biases]

    def step(self, params: DenoiserParams, grads: Gradients, lr: float):
        s = self.s
        self.t += 1
        bc1 = 1.0 - s.beta1**self.t
        bc2 = 1.0 - s.beta2**self.t
        for m, v, p, g in ((self.mw, self.vw, params.weights, grads.weights),
                           (self.mb, self.vb, params.biases, grads.biases)):
            for i in range(len(p)):
                m[i] *= s.beta1
                m[i] += (1.0 - s.beta1) * g[i]
                v[i] *= s.beta2
                v[i] += (1.0 - s.beta2) * g[i] * g[i]
                p[i] -= lr * (m[i] / bc1) / (np.sqrt(v[i] / bc2) + s.eps)


def train(params: DenoiserParams, data, schedule: Schedule, pmf: TimestepPMF,
          cfg: TrainConfig, checkpoint_path=None):
    """Train a copy of params on the dataset; returns (params, TrainReport).

    Each epoch is one seeded-shuffle pass over the dataset; every sample in
    a batch gets its own timestep draw from the pmf and its own noise draw.

    Raises:
        DivergenceError: when the loss becomes non-finite, naming the step.
    """
    if len(data) == 0:
        raise ValueError("dataset is empty")
    if pmf.T != schedule.T:
        raise ValueError(f"pmf has T={pmf.T} but schedule has T={schedule.T}")
    if data.D != params.input_dim:
        raise ValueError(
            f"dataset dimension {data.D} != network input_dim {params.input_dim}")
    params = params.copy()
    rng = np.random.default_rng(cfg.seed)
    opt = _Adam(params, cfg.adam)
    N = len(data)
    signals = data.signals
    hist = np.zeros(schedule.T, dtype=np.int64)
    epoch_losses = []
    start = time.perf_counter()
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(N)
        losses = []
        for lo in range(0, N, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            x0s = signals[idx]
            ts = sample_timesteps(pmf, rng, len(idx))
            epss = rng.standard_normal((len(idx), data.D))
            step += 1
            try:
                loss, grads = loss_and_grads(params, (x0s, ts, epss), schedule)
            except DivergenceError as e:
                raise DivergenceError(
                    f"training diverged at step {step} (epoch {epoch + 1}): {e}"
                ) from e
            opt.step(params, grads, cfg.learning_rate)
            np.add.at(hist, ts - 1, 1)
            losses.append(loss)
        epoch_losses.append(float(np.mean(losses)))
        if (checkpoint_path is not None and cfg.checkpoint_every > 0
                and (epoch + 1) % cfg.checkpoint_every == 0):
            from .data import save_checkpoint
            save_checkpoint(f"{checkpoint_path}.epoch{epoch + 1:04d}", params,
                            {"epochs_completed": epoch + 1})
    report = TrainReport(np.array(epoch_losses), hist,
                         time.perf_counter() - start)
    return params, report


def pretrain_then_finetune(data, schedule: Schedule, ci: CIConfig | None,
                           cfg_pre: TrainConfig, cfg_fine: TrainConfig,
                           embed_dim: int = 32, hidden_dims=(128, 128),
                           init_seed: int = 0):
    """Uniform-sampling pretrain followed by a CI-focused fine-tune.

    Returns (params, pretrain_report, finetune_report). The pretrain config
    must not carry a CI; the fine-tune CI comes from `ci` (cfg_fine.ci, if
    set, must agree).
    """
    if cfg_pre.ci is not None:
        raise ValueError("pretraining must use uniform sampling (cfg_pre.ci=None)")
    if cfg_fine.ci is not None and ci is not None and cfg_fine.ci != ci:
        raise ValueError("cfg_fine.ci disagrees with the ci argument")
    ci = ci if ci is not None else cfg_fine.ci
    params0 = init_params(data.D, embed_dim, hidden_dims, init_seed)
    base, rep_pre = train(params0, data, schedule, uniform_pmf(schedule.T), cfg_pre)
    pmf = pmf_from_ci(ci, schedule.T) if ci is not None else uniform_pmf(schedule.T)
    tuned, rep_fine = train(base, data, schedule, pmf, cfg_fine)
    return tuned, rep_pre, rep_fine
