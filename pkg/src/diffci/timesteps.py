"""Discrete timestep sampling distributions built from a confidence interval.

A confidence interval [c_l, c_h] with a standard-normal quantile z pins a
normal distribution over continuous time: mu = (c_l+c_h)/2 and
sigma = (c_h-c_l)/(2z). The normal is truncated to [0, T]; the probability
mass falling outside [0, T] is redistributed uniformly over {1, ..., T} so
every timestep keeps a nonzero sampling probability. Discrete bins use CDF
differences over unit intervals: timestep t owns the mass of [t-1, t].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

__all__ = [
    "Z_CENTRAL_50",
    "CIConfig",
    "NormalParams",
    "TimestepPMF",
    "ci_to_params",
    "normal_cdf",
    "tail_mass",
    "build_pmf",
    "pmf_from_ci",
    "uniform_pmf",
    "sample_timestep",
    "sample_timesteps",
    "interval_mass",
]

# Standard-normal quantile whose central interval covers 50% of the mass.
Z_CENTRAL_50 = 0.67449


@dataclass(frozen=True)
class CIConfig:
    """Lower/upper confidence bounds on the timestep axis plus the quantile z."""

    c_l: float
    c_h: float
    z: float = Z_CENTRAL_50

    def __post_init__(self):
        if not (np.isfinite(self.c_l) and np.isfinite(self.c_h) and np.isfinite(self.z)):
            raise ValueError("CIConfig fields must be finite")
        if self.c_l >= self.c_h:
            raise ValueError(f"need c_l < c_h, got ({self.c_l}, {self.c_h})")
        if self.z <= 0:
            raise ValueError(f"need z > 0, got {self.z}")


@dataclass(frozen=True)
class NormalParams:
    """Mean and standard deviation of the continuous timestep normal."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"need sigma > 0, got {self.sigma}")


@dataclass(frozen=True)
class TimestepPMF:
    """Discrete sampling distribution over timesteps {1, ..., T}.

    probs[t-1] = lam * m_t + (1 - lam)/T where m_t is the truncated-normal
    bin mass and lam is the interior probability of the untruncated normal.
    params records the construction; it is None for the exact-uniform pmf,
    which is not derived from a normal.
    """

    T: int
    probs: np.ndarray
    lam: float
    tail_mass: float
    params: NormalParams | None
    cdf: np.ndarray

    def __post_init__(self):
        self.probs.flags.writeable = False
        self.cdf.flags.writeable = False


def ci_to_params(ci: CIConfig) -> NormalParams:
    """Convert a confidence interval into normal parameters.

    mu = (c_l + c_h)/2, sigma = (c_h - c_l)/(2 z).
    """
    mu = (ci.c_l + ci.c_h) / 2.0
    sigma = (ci.c_h - ci.c_l) / (2.0 * ci.z)
    return NormalParams(mu, sigma)


def normal_cdf(x):
    """Standard normal CDF, accurate to well below 1e-12 absolute."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("normal_cdf requires finite input")
    out = ndtr(x)
    return float(out) if out.ndim == 0 else out


def tail_mass(params: NormalParams, T: int) -> float:
    """Probability a N(mu, sigma^2) draw falls outside [0, T]."""
    lo = ndtr((0.0 - params.mu) / params.sigma)
    hi = ndtr((params.mu - T) / params.sigma)  # == 1 - Phi((T-mu)/sigma)
    return float(lo + hi)


def build_pmf(params: NormalParams, T: int) -> TimestepPMF:
    """Mix a [0, T]-truncated normal with a uniform floor over {1, ..., T}.

    The mixture weight lam equals the interior mass of the untruncated
    normal, so lam + tail_mass = 1 and the floor is (1-lam)/T.

    Raises:
        ValueError: if the interior mass underflows (all mass outside [0, T]);
            widen sigma or move mu into range rather than silently falling
            back to uniform.
    """
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    T = int(T)
    edges = (np.arange(T + 1, dtype=np.float64) - params.mu) / params.sigma
    cdf_edges = ndtr(edges)
    interior = float(cdf_edges[-1] - cdf_edges[0])
    if interior < 1e-300:
        raise ValueError(
            "degenerate truncation: the normal has no mass inside [0, "
            f"{T}] (mu={params.mu}, sigma={params.sigma}); "
            "widen sigma or choose mu inside the range")
    p_tail = tail_mass(params, T)
    lam = 1.0 - p_tail
    m = np.diff(cdf_edges) / interior
    probs = lam * m + (1.0 - lam) / T
    cdf = np.cumsum(probs)
    return TimestepPMF(T, probs, lam, p_tail, params, cdf)


def pmf_from_ci(ci: CIConfig, T: int) -> TimestepPMF:
    """Shorthand for build_pmf(ci_to_params(ci), T)."""
    return build_pmf(ci_to_params(ci), T)


def uniform_pmf(T: int) -> TimestepPMF:
    """Exact-uniform pmf over {1, ..., T} (the baseline sampler)."""
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    T = int(T)
    probs = np.full(T, 1.0 / T)
    return TimestepPMF(T, probs, 0.0, 1.0, None, np.cumsum(probs))


def sample_timesteps(pmf: TimestepPMF, rng: np.random.Generator,
                     size: int) -> np.ndarray:
    """Draw `size` timesteps by inverse-transform sampling over the cdf."""
    u = rng.random(size)
    idx = np.searchsorted(pmf.cdf, u, side="right")
    # u can exceed cdf[-1] by a few ulp when the cumsum lands below 1.
    idx = np.minimum(idx, pmf.T - 1)
    return idx + 1


def sample_timestep(pmf: TimestepPMF, rng: np.random.Generator) -> int:
    """Draw a single timestep in {1, ..., T}."""
    return int(sample_timesteps(pmf, rng, 1)[0])


def interval_mass(pmf: TimestepPMF, lo: int, hi: int) -> float:
    """Total probability of timesteps t with lo <= t <= hi."""
    lo = max(1, int(math.ceil(lo)))
    hi = min(pmf.T, int(math.floor(hi)))
    if hi < lo:
        return 0.0
    return float(pmf.probs[lo - 1:hi].sum())
