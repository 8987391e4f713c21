"""Analytic per-timestep learning-contribution model.

The effective contribution of timestep t under sampling distribution p is
C(t) = p(t) * SNR(t), its sensitivity to the normal mean is
dC/dmu = SNR(t) * (t - mu)/sigma^2 * p(t), and the total expected gradient
proxy is the sum of contributions. The derivative uses the untruncated
normal density: it describes the continuous parameterization before any
truncation or floor mixing is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .schedule import Schedule
from .timesteps import NormalParams, TimestepPMF

__all__ = [
    "ContributionProfile",
    "contribution",
    "contribution_dmu",
    "total_gradient_proxy",
    "region_split",
]


@dataclass(frozen=True)
class ContributionProfile:
    """Contribution per timestep split at an SNR threshold tau."""

    T: int
    contributions: np.ndarray
    total: float
    high_region_mass: float  # sum over {t : SNR(t) >= tau}
    low_region_mass: float   # sum over {t : SNR(t) < tau}
    tau: float

    def __post_init__(self):
        self.contributions.flags.writeable = False


def _check_compatible(pmf: TimestepPMF, schedule: Schedule):
    if pmf.T != schedule.T:
        raise ValueError(f"pmf has T={pmf.T} but schedule has T={schedule.T}")


def contribution(pmf: TimestepPMF, schedule: Schedule, t: int) -> float:
    """C(t) = probs[t] * SNR(t)."""
    _check_compatible(pmf, schedule)
    if not 1 <= t <= schedule.T:
        raise ValueError(f"timestep {t} outside 1..{schedule.T}")
    return float(pmf.probs[t - 1] * schedule.snrs[t - 1])


def normal_density(params: NormalParams, t: float) -> float:
    """Untruncated normal density at t."""
    u = (t - params.mu) / params.sigma
    return math.exp(-0.5 * u * u) / (params.sigma * math.sqrt(2.0 * math.pi))


def contribution_dmu(params: NormalParams, schedule: Schedule, t: int) -> float:
    """Derivative of C(t) with respect to the normal mean mu.

    Positive for t > mu, negative for t < mu: raising the mean shifts
    learning emphasis toward later timesteps.
    """
    if not 1 <= t <= schedule.T:
        raise ValueError(f"timestep {t} outside 1..{schedule.T}")
    s = float(schedule.snrs[t - 1])
    return s * ((t - params.mu) / params.sigma**2) * normal_density(params, t)


def total_gradient_proxy(pmf: TimestepPMF, schedule: Schedule) -> float:
    """Sum over t of probs[t] * SNR(t); linear in the sampling probabilities."""
    _check_compatible(pmf, schedule)
    return float(np.dot(pmf.probs, schedule.snrs))


def region_split(pmf: TimestepPMF, schedule: Schedule,
                 tau: float = 1.0) -> ContributionProfile:
    """Partition the total contribution at SNR threshold tau.

    tau = 1 marks equal signal and noise power.
    """
    _check_compatible(pmf, schedule)
    if not tau > 0:
        raise ValueError(f"need tau > 0, got {tau}")
    contribs = pmf.probs * schedule.snrs
    high = schedule.snrs >= tau
    high_mass = float(contribs[high].sum())
    low_mass = float(contribs[~high].sum())
    return ContributionProfile(schedule.T, contribs, float(contribs.sum()),
                               high_mass, low_mass, float(tau))
