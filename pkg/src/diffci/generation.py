"""Ancestral DDPM sampling from a trained denoiser."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import DenoiserParams, forward_batch
from .schedule import Schedule

__all__ = ["GenerationConfig", "ddpm_sample"]


@dataclass(frozen=True)
class GenerationConfig:
    num_samples: int
    seed: int = 0
    clip_range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError(f"num_samples must be >= 1, got {self.num_samples}")
        if self.clip_range is not None and not self.clip_range[0] < self.clip_range[1]:
            raise ValueError(f"clip_range must be (lo, hi) with lo < hi, "
                             f"got {self.clip_range}")


def ddpm_sample(params: DenoiserParams, schedule: Schedule,
                cfg: GenerationConfig) -> np.ndarray:
    """Generate signals by running the full reverse process from t=T to 1.

    Each step computes the posterior mean
    (x_t - beta_t/sqrt(1-abar_t) * eps_hat) / sqrt(1-beta_t) and adds
    sqrt(beta_t)-scaled noise except at the final step. Intermediate states
    are never clipped; an optional clamp applies to the final output only.

    Returns an array [num_samples, input_dim]; reproducible from cfg.seed.

    Raises:
        FloatingPointError: if any intermediate state goes non-finite,
            naming the offending timestep.
    """
    rng = np.random.default_rng(cfg.seed)
    n, D, T = cfg.num_samples, params.input_dim, schedule.T
    x = rng.standard_normal((n, D))
    for t in range(T, 0, -1):
        i = t - 1
        eps_hat = forward_batch(params, x, np.full(n, t))
        mean = (x - (schedule.betas[i] / schedule.sigmas[i]) * eps_hat) \
            / np.sqrt(1.0 - schedule.betas[i])
        if t > 1:
            x = mean + np.sqrt(schedule.betas[i]) * rng.standard_normal((n, D))
        else:
            x = mean
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(
                f"reverse process produced non-finite values at timestep {t}")
    if cfg.clip_range is not None:
        x = np.clip(x, cfg.clip_range[0], cfg.clip_range[1])
    return x
