"""DDPM forward-process schedule: per-timestep noise levels and SNR.

Timesteps are 1-based: t runs over {1, ..., T}. Array fields are 0-indexed
internally, so the entry for timestep t lives at index t-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Schedule", "make_linear_schedule", "snr", "forward_diffuse"]


@dataclass(frozen=True)
class Schedule:
    """Precomputed forward-process quantities for a T-step diffusion.

    Attributes:
        T: number of diffusion steps.
        betas: per-step noise variances, each in (0, 1).
        alpha_bars: cumulative products of (1 - beta), strictly decreasing.
        signal_coefs: sqrt(alpha_bar), the multiplier on the clean signal.
        sigmas: sqrt(1 - alpha_bar), the multiplier on the injected noise.
        snrs: alpha_bar / (1 - alpha_bar), strictly decreasing.
    """

    T: int
    betas: np.ndarray
    alpha_bars: np.ndarray
    signal_coefs: np.ndarray
    sigmas: np.ndarray
    snrs: np.ndarray

    def __post_init__(self):
        for arr in (self.betas, self.alpha_bars, self.signal_coefs,
                    self.sigmas, self.snrs):
            arr.flags.writeable = False


def make_linear_schedule(T: int, beta_start: float = 1e-4,
                         beta_end: float = 0.02) -> Schedule:
    """Build a schedule with betas linearly spaced from beta_start to beta_end.

    All derived arrays are precomputed in double precision at construction.
    """
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    if not (np.isfinite(beta_start) and np.isfinite(beta_end)):
        raise ValueError("beta bounds must be finite")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(
            f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
    betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    # accumulate in log space: 1 - alpha_bar stays accurate when alpha_bar ~ 1
    log_alpha_bars = np.cumsum(np.log1p(-betas))
    alpha_bars = np.exp(log_alpha_bars)
    one_minus = -np.expm1(log_alpha_bars)
    signal_coefs = np.sqrt(alpha_bars)
    sigmas = np.sqrt(one_minus)
    snrs = alpha_bars / one_minus
    return Schedule(int(T), betas, alpha_bars, signal_coefs, sigmas, snrs)


def _check_t(schedule: Schedule, t: int) -> int:
    if not 1 <= t <= schedule.T:
        raise ValueError(f"timestep {t} outside 1..{schedule.T}")
    return int(t)


def snr(schedule: Schedule, t: int) -> float:
    """Signal-to-noise ratio alpha_bar_t / (1 - alpha_bar_t) at timestep t."""
    return float(schedule.snrs[_check_t(schedule, t) - 1])


def forward_diffuse(schedule: Schedule, x0: np.ndarray, t: int,
                    eps: np.ndarray) -> np.ndarray:
    """Noise a clean signal to level t: sqrt(abar_t)*x0 + sqrt(1-abar_t)*eps."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError(f"x0 shape {x0.shape} != eps shape {eps.shape}")
    i = _check_t(schedule, t) - 1
    return schedule.signal_coefs[i] * x0 + schedule.sigmas[i] * eps
