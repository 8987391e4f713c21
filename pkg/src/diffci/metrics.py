"""Distributional distance metrics between generated and training sets.

The battery: mean L2 distance to the training set (per-dimension RMS
normalized), PCA projection fitted on training data only, per-component
1D Wasserstein and Jensen-Shannon distances, and Pearson correlation with
a Fisher-transform confidence interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import ndtri
from scipy.stats import t as student_t

__all__ = [
    "PCAModel",
    "CorrelationResult",
    "EvalReport",
    "mean_l2",
    "pca_fit",
    "pca_project",
    "wasserstein1_1d",
    "js_distance",
    "js_distance_multidim",
    "pearson_with_ci",
    "evaluate",
]


@dataclass(frozen=True)
class PCAModel:
    """Top-k principal directions of a training set."""

    mean: np.ndarray                 # [D]
    components: np.ndarray           # [k, D], rows orthonormal
    explained_variances: np.ndarray  # [k], nonincreasing

    def __post_init__(self):
        self.mean.flags.writeable = False
        self.components.flags.writeable = False
        self.explained_variances.flags.writeable = False


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    ci_low: float
    ci_high: float
    p_value: float
    n: int


@dataclass(frozen=True)
class EvalReport:
    mean_l2: float
    pca_components: int
    wasserstein_per_component: np.ndarray
    js_per_component: np.ndarray
    js_raw: float | None = None


def _as_2d(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a nonempty [N, D] array, got {arr.shape}")
    return arr


def mean_l2(generated, train, aggregate: str = "mean") -> float:
    """Average distance from each generated signal to the training set.

    For each generated g the per-sample distance is the mean (or min, with
    aggregate="min") over training samples of ||g - x||_2 / sqrt(D); the
    result is the mean over generated samples. The sqrt(D) normalization
    makes values comparable across signal lengths.
    """
    G = _as_2d(generated, "generated")
    X = _as_2d(train, "train")
    if G.shape[1] != X.shape[1]:
        raise ValueError(f"dimension mismatch: {G.shape[1]} vs {X.shape[1]}")
    if aggregate not in ("mean", "min"):
        raise ValueError(f"aggregate must be 'mean' or 'min', got {aggregate!r}")
    d = cdist(G, X) / math.sqrt(G.shape[1])
    per_gen = d.mean(axis=1) if aggregate == "mean" else d.min(axis=1)
    return float(per_gen.mean())


def pca_fit(train, k: int, max_iter: int = 10_000, tol: float = 1e-10) -> PCAModel:
    """Top-k covariance eigenvectors by power iteration with deflation.

    Each component iterates until the angle between successive vectors
    drops below tol or max_iter is hit. Components are sign-fixed so the
    coordinate of largest magnitude is positive.

    Raises:
        ValueError: when the data has rank below k, naming the achievable rank.
    """
    X = _as_2d(train, "train")
    N, D = X.shape
    if not 1 <= k <= D:
        raise ValueError(f"need 1 <= k <= D={D}, got k={k}")
    if N < k:
        raise ValueError(f"need at least k={k} samples, got {N}")
    mean = X.mean(axis=0)
    Xc = X - mean
    C = (Xc.T @ Xc) / max(N - 1, 1)
    scale = float(np.trace(C))
    if scale <= 0.0:
        raise ValueError("rank deficiency below 1: data has zero variance "
                         "(achievable rank 0)")
    rng = np.random.default_rng(0)  # fixed start keeps fits reproducible
    components: list[np.ndarray] = []
    variances = []
    for j in range(k):
        v = rng.standard_normal(D)
        # iterate in the orthogonal complement of the found components so
        # orthonormality holds to machine precision, not just to the
        # deflation residual
        for u in components:
            v -= (u @ v) * u
        v /= np.linalg.norm(v)
        for _ in range(max_iter):
            w = C @ v
            for u in components:
                w -= (u @ w) * u
            nw = np.linalg.norm(w)
            if nw <= scale * 1e-14:
                raise ValueError(
                    f"rank deficiency below k={k}: achievable rank {j}")
            w /= nw
            angle = math.acos(min(1.0, abs(float(w @ v))))
            v = w if float(w @ v) >= 0 else -w
            if angle < tol:
                break
        lam = float(v @ (C @ v))
        if lam <= scale * 1e-12:
            raise ValueError(f"rank deficiency below k={k}: achievable rank {j}")
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        components.append(v)
        variances.append(lam)
        C = C - lam * np.outer(v, v)
    return PCAModel(mean, np.array(components), np.array(variances))


def pca_project(model: PCAModel, x) -> np.ndarray:
    """Project signals onto the fitted components; returns [N, k]."""
    X = _as_2d(x, "x")
    if X.shape[1] != model.mean.shape[0]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {model.mean.shape[0]}")
    return (X - model.mean) @ model.components.T


def wasserstein1_1d(a, b) -> float:
    """W1 between the empirical distributions of two real samples.

    Equal sizes reduce to the mean absolute difference of sorted order
    statistics; unequal sizes integrate |F_a - F_b| over the merged sample
    points. The two paths agree when sizes happen to match.
    """
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("wasserstein1_1d requires nonempty inputs")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    points = np.sort(np.concatenate([a, b]))
    fa = np.searchsorted(a, points[:-1], side="right") / a.size
    fb = np.searchsorted(b, points[:-1], side="right") / b.size
    return float(np.sum(np.abs(fa - fb) * np.diff(points)))


def _kl_bits(p: np.ndarray, m: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(p[mask] / m[mask])))


def js_distance(a, b, bins: int = 50) -> float:
    """Jensen-Shannon distance between histogram estimates of two samples.

    Both samples are binned on a shared equal-width grid spanning their
    joint range. Returns sqrt of the base-2 JS divergence, a metric in
    [0, 1]. A degenerate shared range (all values identical) gives 0.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("js_distance requires nonempty inputs")
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if lo == hi:
        return 0.0
    p, _ = np.histogram(a, bins=bins, range=(lo, hi))
    q, _ = np.histogram(b, bins=bins, range=(lo, hi))
    p = p / a.size
    q = q / b.size
    m = 0.5 * (p + q)
    jsd = 0.5 * _kl_bits(p, m) + 0.5 * _kl_bits(q, m)
    return float(np.sqrt(min(max(jsd, 0.0), 1.0)))


def js_distance_multidim(a, b, bins: int = 50) -> float:
    """Per-dimension js_distance averaged over dimensions."""
    A = _as_2d(a, "a")
    B = _as_2d(b, "b")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return float(np.mean([js_distance(A[:, j], B[:, j], bins)
                          for j in range(A.shape[1])]))


def pearson_with_ci(x, y, alpha: float = 0.05) -> CorrelationResult:
    """Pearson r with a Fisher-transform CI and a two-sided t-test p-value.

    |r| within 1e-13 of 1 snaps to exactly +/-1 (perfect collinearity up to
    float rounding), giving the degenerate interval and p = 0.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.size
    if n != y.size:
        raise ValueError(f"length mismatch: {n} vs {y.size}")
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    xm = x - x.mean()
    ym = y - y.mean()
    sx = float(np.sqrt(np.sum(xm * xm)))
    sy = float(np.sqrt(np.sum(ym * ym)))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("zero variance in x or y")
    r = float(np.clip(np.sum(xm * ym) / (sx * sy), -1.0, 1.0))
    if abs(r) >= 1.0 - 1e-13:
        r = math.copysign(1.0, r)
        return CorrelationResult(r, r, r, 0.0, n)
    zq = float(ndtri(1.0 - alpha / 2.0))
    half = zq / math.sqrt(n - 3) if n > 3 else math.inf
    zr = math.atanh(r)
    ci_low = math.tanh(zr - half)
    ci_high = math.tanh(zr + half)
    tstat = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = float(2.0 * student_t.sf(abs(tstat), n - 2))
    return CorrelationResult(r, ci_low, ci_high, p, n)


def evaluate(generated, train, pca_k: int = 2, bins: int = 50,
             include_js_raw: bool = True) -> EvalReport:
    """Full metric battery; PCA is fitted on the training set only."""
    G = _as_2d(generated, "generated")
    X = _as_2d(train, "train")
    model = pca_fit(X, pca_k)
    Pg = pca_project(model, G)
    Pt = pca_project(model, X)
    w = np.array([wasserstein1_1d(Pg[:, j], Pt[:, j]) for j in range(pca_k)])
    js = np.array([js_distance(Pg[:, j], Pt[:, j], bins) for j in range(pca_k)])
    raw = js_distance_multidim(G, X, bins) if include_js_raw else None
    return EvalReport(mean_l2(G, X), pca_k, w, js, raw)
