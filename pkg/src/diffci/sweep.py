"""Triangular CI-grid experiment harness.

Every (c_l, c_h) pair with c_l < c_h drawn from a bound list defines one
cell; each cell fine-tunes a copy of a shared uniform-sampling baseline
with that pair's mixture pmf, generates signals, and evaluates them against
the training data. Cell seeds are stable hashes of (replicate seed, c_l,
c_h), so adding cells or reordering execution never perturbs existing
results, and parallel runs merge deterministically in grid order.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .generation import GenerationConfig, ddpm_sample
from .metrics import CorrelationResult, EvalReport, evaluate, pearson_with_ci
from .network import DenoiserParams
from .schedule import Schedule
from .timesteps import CIConfig, Z_CENTRAL_50, pmf_from_ci
from .training import TrainConfig, train

__all__ = [
    "SweepGrid",
    "CellRow",
    "SweepResult",
    "SweepError",
    "build_grid",
    "run_sweep",
    "loss_by_width_report",
    "write_sweep_csv",
    "write_correlation_csv",
    "DEFAULT_BOUNDS",
]

DEFAULT_BOUNDS = tuple(float(b) for b in range(100, 1001, 100))


class SweepError(RuntimeError):
    """Raised when too many sweep cells fail."""


@dataclass(frozen=True)
class SweepGrid:
    bounds: tuple[float, ...]
    pairs: tuple[tuple[float, float], ...]
    z: float


@dataclass(frozen=True)
class CellRow:
    c_l: float
    c_h: float
    seed: int
    final_loss: float
    report: EvalReport

    @property
    def mean_location(self) -> float:
        return (self.c_l + self.c_h) / 2.0

    @property
    def width(self) -> float:
        return self.c_h - self.c_l


@dataclass
class SweepResult:
    grid: SweepGrid
    rows: list[CellRow]
    corr_mean_location: CorrelationResult | None
    corr_width: CorrelationResult | None
    distance_metric: str
    failures: list[tuple[float, float, int, str]]


def build_grid(bounds=DEFAULT_BOUNDS, z: float = Z_CENTRAL_50) -> SweepGrid:
    """Enumerate all ordered (c_l, c_h) pairs from a sorted bound list."""
    bounds = tuple(float(b) for b in bounds)
    if len(bounds) < 2:
        raise ValueError("need at least two bounds")
    if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
        raise ValueError(f"bounds must be strictly increasing, got {bounds}")
    if bounds[0] < 0:
        raise ValueError(f"bounds must be nonnegative, got {bounds}")
    pairs = tuple((lo, hi) for i, lo in enumerate(bounds)
                  for hi in bounds[i + 1:])
    return SweepGrid(bounds, pairs, float(z))


def cell_seed(replicate_seed: int, c_l: float, c_h: float) -> int:
    """Stable 63-bit seed for one sweep cell."""
    key = f"{replicate_seed}:{c_l!r}:{c_h!r}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(),
                          "little") >> 1


def _distance_of(report: EvalReport, metric: str) -> float:
    if metric == "mean_l2":
        return report.mean_l2
    if metric == "js_raw":
        if report.js_raw is None:
            raise ValueError("js_raw was not computed for this report")
        return report.js_raw
    raise ValueError(f"unknown distance metric {metric!r}")


def _run_cell(args) -> CellRow:
    (pair, z, data, schedule, base_params, cfg_fine, gen_cfg, seed,
     pca_k, bins) = args
    c_l, c_h = pair
    ci = CIConfig(c_l, c_h, z)
    s = cell_seed(seed, c_l, c_h)
    pmf = pmf_from_ci(ci, schedule.T)
    cfg = replace(cfg_fine, ci=ci, seed=s)
    tuned, rep = train(base_params, data, schedule, pmf, cfg)
    gen = ddpm_sample(tuned, schedule, replace(gen_cfg, seed=s ^ 0x5DEECE66D))
    report = evaluate(gen, data.signals, pca_k=pca_k, bins=bins)
    return CellRow(c_l, c_h, seed, float(rep.epoch_losses[-1]), report)


def run_sweep(grid: SweepGrid, data, schedule: Schedule,
              base_params: DenoiserParams, cfg_fine: TrainConfig,
              gen_cfg: GenerationConfig, seeds, jobs: int = 1,
              distance: str = "mean_l2", pca_k: int = 2,
              bins: int = 50) -> SweepResult:
    """Fine-tune/generate/evaluate every (pair, seed) cell of the grid.

    base_params should be a uniform-sampling baseline shared by all cells.
    Individual cell failures are recorded and excluded; the sweep aborts
    only when more than 10% of cells fail. Correlations of the chosen
    distance column against mean location and width are attached when at
    least 3 rows succeeded.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one replicate seed")
    tasks = [((pair), grid.z, data, schedule, base_params, cfg_fine, gen_cfg,
              seed, pca_k, bins)
             for pair in grid.pairs for seed in seeds]
    rows: list[CellRow | None] = [None] * len(tasks)
    failures: list[tuple[float, float, int, str]] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, outcome in enumerate(pool.map(_try_cell, tasks)):
                rows[i] = _record(outcome, tasks[i], failures)
    else:
        for i, task in enumerate(tasks):
            rows[i] = _record(_try_cell(task), task, failures)
    done = [r for r in rows if r is not None]
    if len(failures) > 0.10 * len(tasks):
        raise SweepError(
            f"{len(failures)} of {len(tasks)} sweep cells failed: "
            + "; ".join(f"({cl},{ch},seed={sd}): {msg}"
                        for cl, ch, sd, msg in failures[:5]))
    corr_mean = corr_width = None
    if len(done) >= 3:
        dist = [_distance_of(r.report, distance) for r in done]
        corr_mean = pearson_with_ci([r.mean_location for r in done], dist)
        corr_width = pearson_with_ci([r.width for r in done], dist)
    return SweepResult(grid, done, corr_mean, corr_width, distance, failures)


def _try_cell(task):
    try:
        return _run_cell(task)
    except Exception as e:  # noqa: BLE001 - cell isolation is the contract
        return e


def _record(outcome, task, failures):
    if isinstance(outcome, CellRow):
        return outcome
    (c_l, c_h), seed = task[0], task[7]
    failures.append((c_l, c_h, seed, str(outcome)))
    return None


def loss_by_width_report(result: SweepResult) -> dict:
    """Group final losses by CI width, ordered by mean location within."""
    if not result.rows:
        raise ValueError("sweep result has no rows")
    table: dict[float, list[tuple[float, int, float]]] = {}
    for row in result.rows:
        table.setdefault(row.width, []).append(
            (row.mean_location, row.seed, row.final_loss))
    for width in table:
        table[width].sort()
    return dict(sorted(table.items()))


_SWEEP_HEADER = ("c_l,c_h,mean_location,width,seed,final_loss,mean_l2,"
                 "wasserstein_c1,wasserstein_c2,js_c1,js_c2,js_raw")


def write_sweep_csv(result: SweepResult, path) -> None:
    """Persist per-cell rows with the standard column layout."""
    with open(path, "w") as fh:
        fh.write(_SWEEP_HEADER + "\n")
        for r in result.rows:
            rep = r.report
            w = list(rep.wasserstein_per_component) + [float("nan")] * 2
            js = list(rep.js_per_component) + [float("nan")] * 2
            cells = [r.c_l, r.c_h, r.mean_location, r.width, r.seed,
                     r.final_loss, rep.mean_l2, w[0], w[1], js[0], js[1],
                     rep.js_raw if rep.js_raw is not None else float("nan")]
            fh.write(",".join(repr(float(c)) if not isinstance(c, int) else str(c)
                              for c in cells) + "\n")


def write_correlation_csv(result: SweepResult, path) -> None:
    with open(path, "w") as fh:
        fh.write("covariate,r,ci_low,ci_high,p_value,n\n")
        for name, corr in (("mean_location", result.corr_mean_location),
                           ("width", result.corr_width)):
            if corr is None:
                fh.write(f"{name},nan,nan,nan,nan,0\n")
            else:
                fh.write(f"{name},{corr.r!r},{corr.ci_low!r},{corr.ci_high!r},"
                         f"{corr.p_value!r},{corr.n}\n")
