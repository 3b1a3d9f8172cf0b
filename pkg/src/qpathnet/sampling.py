"""Monte-Carlo sampling of measurement records.

Outcomes of a run are a reading per meter plus the result of the final
selection.  Their exact joint distribution is known on the grid, so trials
are drawn by inverse CDF over the discrete (branch, grid cell) masses: the
pointer is read first, and the selection branch is drawn jointly from the
unnormalized branch densities.

Reproducibility: trial i consumes fixed positions of a Philox stream keyed
by the seed (see rng.uniform_block), so records are bit-identical for any
worker count or chunking.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .meter import Grid, MeterSpec, joint_reading_distribution, mean_reading
from .paths import MeasurementChain
from .rng import CHUNK, uniform_block, worker_count


@dataclass(frozen=True)
class TrialRecord:
    """One sampled run: grid readings per meter and the selection branch
    (0 = selection succeeded, k >= 1 = k-th completion state)."""

    trial_id: int
    readings: tuple[float, ...]
    branch: int

    @property
    def postselected(self) -> bool:
        return self.branch == 0


@dataclass(frozen=True)
class MeterSummary:
    conditional_mean: float
    standard_error: float
    exact_mean: float

    @property
    def z_score(self) -> float:
        if self.standard_error == 0.0:
            return 0.0
        return (self.conditional_mean - self.exact_mean) / self.standard_error


@dataclass(frozen=True)
class TrialSummary:
    n_trials: int
    n_success: int
    success_rate: float
    exact_success_probability: float
    meters: tuple[MeterSummary, ...]


@dataclass(frozen=True)
class TrialSet:
    """Sampled records in trial order plus the exact distribution they came
    from."""

    seed: int
    readings: np.ndarray  # shape (n_trials, n_meters)
    branches: np.ndarray  # shape (n_trials,)
    exact_success_probability: float
    exact_means: tuple[float, ...]

    @property
    def n_trials(self) -> int:
        return self.branches.size

    @property
    def n_meters(self) -> int:
        return self.readings.shape[1]

    def records(self) -> list[TrialRecord]:
        return [
            TrialRecord(i, tuple(self.readings[i]), int(self.branches[i]))
            for i in range(self.n_trials)
        ]

    def __iter__(self):
        return iter(self.records())

    def summary(self) -> TrialSummary:
        success = self.branches == 0
        n_success = int(success.sum())
        meters = []
        for r in range(self.n_meters):
            vals = self.readings[success, r]
            if vals.size:
                mean = float(vals.mean())
                se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
            else:
                mean, se = math.nan, math.nan
            meters.append(MeterSummary(mean, se, self.exact_means[r]))
        return TrialSummary(
            n_trials=self.n_trials,
            n_success=n_success,
            success_rate=n_success / self.n_trials if self.n_trials else math.nan,
            exact_success_probability=self.exact_success_probability,
            meters=tuple(meters),
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["trial_id"] + [f"reading_{r}" for r in range(self.n_meters)] + ["branch"]
            )
            for i in range(self.n_trials):
                writer.writerow(
                    [i] + [repr(float(v)) for v in self.readings[i]] + [int(self.branches[i])]
                )


def sample_trials(
    chain: MeasurementChain,
    meters: list[MeterSpec],
    n_trials: int,
    seed: int,
    grids: list[Grid] | None = None,
    max_workers: int | None = None,
) -> TrialSet:
    """Draw measurement records from the exact (branch, readings) law.

    Readings lie on the grid nodes.  The empirical conditional mean of each
    meter converges to its exact mean reading; the summary reports standard
    errors for the comparison.
    """
    if n_trials < 1:
        raise ValueError("need at least one trial")
    branches = chain.branches()
    joints = [joint_reading_distribution(b, meters, grids) for b in branches]
    grids = list(joints[0].grids)

    # cell mass = density * separable trapezoid weights, flattened per branch
    cell_weights = None
    for g in grids:
        w = g.weights()
        cell_weights = w if cell_weights is None else np.multiply.outer(cell_weights, w)
    masses = np.concatenate([(j.density * cell_weights).reshape(-1) for j in joints])
    total = masses.sum()
    if total <= 0.0:
        raise ValueError("total probability of all branches is zero; nothing to sample")
    cdf = np.cumsum(masses)
    exact_success = joints[0].norm / total
    exact_means = tuple(
        joints[0].marginal_mean(r) if joints[0].norm > 0 else math.nan
        for r in range(len(meters))
    )

    cells_per_branch = int(np.prod([g.n for g in grids]))
    shape = tuple(g.n for g in grids)
    axes_xs = [g.xs() for g in grids]

    def run_chunk(chunk_index: int) -> tuple[np.ndarray, np.ndarray]:
        lo = chunk_index * CHUNK
        hi = min(lo + CHUNK, n_trials)
        u = uniform_block(seed, lo, hi - lo)
        flat = np.searchsorted(cdf, u * total, side="right")
        flat = np.minimum(flat, masses.size - 1)
        branch_ids = flat // cells_per_branch
        cell_ids = flat % cells_per_branch
        cell_idx = np.unravel_index(cell_ids, shape)
        readings = np.column_stack([axes_xs[r][cell_idx[r]] for r in range(len(grids))])
        return readings, branch_ids.astype(np.int64)

    n_chunks = math.ceil(n_trials / CHUNK)
    workers = min(worker_count(max_workers), n_chunks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, range(n_chunks)))
    else:
        parts = [run_chunk(c) for c in range(n_chunks)]

    readings = np.concatenate([p[0] for p in parts], axis=0)
    branch_ids = np.concatenate([p[1] for p in parts])
    return TrialSet(seed, readings, branch_ids, float(exact_success), exact_means)


def exact_conditional_mean(chain: MeasurementChain, meters: list[MeterSpec], axis: int = 0):
    """Convenience: exact mean reading of one meter on the success branch."""
    joint = joint_reading_distribution(chain.branches()[0], meters)
    return mean_reading(joint.marginal(axis))
