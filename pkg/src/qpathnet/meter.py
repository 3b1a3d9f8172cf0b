"""Pointer models: initial profiles, reading densities and their limits.

A meter couples a pointer to a path functional.  After the run the pointer
wavefunction is the convolution of the initial profile with the discrete
amplitude distribution of the functional,

    M(xi) = sum_m A(f_m) G(xi - f_m),        P(xi) = |M(xi)|^2,

evaluated on a uniform grid.  Narrow profiles destroy the interference
between paths with different functional values (accurate limit); very wide
profiles leave it intact, and the mean reading tends to the real part of
the amplitude-weighted mean.

Numerics: composite trapezoid quadrature on the grid.  The rectangular
profile reports the half-jump value exactly at its edges, which makes
trapezoid sums over edge-aligned grids exact for piecewise-constant
densities.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .core import StateVector
from .paths import (
    DEFAULT_MERGE_TOL,
    AmplitudeDistribution,
    MeasurementChain,
    PathFunctional,
    amplitude_distribution,
    path_amplitudes,
    weak_value,
)

# Default grid: 200 samples per profile width, padded by 6 widths beyond the
# support (Gaussian tail mass beyond the pad is below 1e-9).
GRID_POINTS_PER_WIDTH = 200
GRID_PAD_WIDTHS = 6.0
# Minimum padding the coverage precondition insists on.
MIN_PAD_WIDTHS = 5.0


@dataclass(frozen=True)
class PointerProfile:
    """Initial real pointer wavefunction G(xi) of a given width.

    All shapes obey the scaling law G(xi | w) = w^(-1/2) * g(xi / w) for a
    fixed unit-width template g with integral g^2 = 1, so the squared profile
    is normalized for every width.
    """

    shape: str
    width: float
    template_xs: np.ndarray | None = None
    template_values: np.ndarray | None = None

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("profile width must be positive")
        if self.shape not in ("gaussian", "rectangular", "tabulated"):
            raise ValueError(f"unknown profile shape {self.shape!r}")
        if self.shape == "tabulated":
            xs = np.asarray(self.template_xs, dtype=float)
            if np.iscomplexobj(self.template_values):
                raise ValueError("pointer profile must be real-valued")
            vals = np.asarray(self.template_values, dtype=float)
            if xs.ndim != 1 or xs.shape != vals.shape or xs.size < 2:
                raise ValueError("tabulated profile needs matching 1-d xs and values")
            if np.any(np.diff(xs) <= 0):
                raise ValueError("tabulated xs must be strictly increasing")
            norm = np.trapezoid(vals**2, xs)
            if abs(norm - 1.0) > 1e-8:
                raise ValueError(f"tabulated profile has integral G^2 = {norm}, expected 1")
            object.__setattr__(self, "template_xs", xs)
            object.__setattr__(self, "template_values", vals)

    @classmethod
    def gaussian(cls, width: float) -> "PointerProfile":
        """G(xi) = (2 pi w^2)^(-1/4) exp(-xi^2 / (4 w^2)); G^2 is a normal
        density with standard deviation equal to the width."""
        return cls("gaussian", float(width))

    @classmethod
    def rectangular(cls, width: float) -> "PointerProfile":
        """Flat window of full width w: G = w^(-1/2) for |xi| <= w/2."""
        return cls("rectangular", float(width))

    @classmethod
    def tabulated(cls, xs, values, width: float = 1.0) -> "PointerProfile":
        """Unit-width template sampled on xs, rescaled to the given width."""
        return cls("tabulated", float(width), np.asarray(xs, dtype=float), np.asarray(values))

    def samples(self, xi: np.ndarray) -> np.ndarray:
        """G(xi) evaluated elementwise."""
        xi = np.asarray(xi, dtype=float)
        w = self.width
        if self.shape == "gaussian":
            return (2.0 * np.pi * w**2) ** (-0.25) * np.exp(-(xi**2) / (4.0 * w**2))
        if self.shape == "rectangular":
            half = w / 2.0
            edge_tol = 1e-9 * w
            out = np.where(np.abs(xi) < half - edge_tol, w**-0.5, 0.0)
            # half of the squared jump at the edges keeps trapezoid sums exact
            out = np.where(np.abs(np.abs(xi) - half) <= edge_tol, (2.0 * w) ** -0.5, out)
            return out
        scaled = xi / w
        return w**-0.5 * np.interp(scaled, self.template_xs, self.template_values, left=0.0, right=0.0)

    def with_width(self, width: float) -> "PointerProfile":
        return PointerProfile(self.shape, float(width), self.template_xs, self.template_values)


@dataclass(frozen=True)
class MeterSpec:
    """One pointer, coupled so its total shift is the functional's value."""

    functional: PathFunctional
    profile: PointerProfile


@dataclass(frozen=True)
class Grid:
    """Uniform sample points start + step * [0..n)."""

    start: float
    step: float
    n: int

    def __post_init__(self):
        if self.step <= 0 or self.n < 2:
            raise ValueError("grid needs positive step and at least two points")

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.n - 1)

    def xs(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n)

    def weights(self) -> np.ndarray:
        """Composite trapezoid quadrature weights."""
        w = np.full(self.n, self.step)
        w[0] = w[-1] = self.step / 2.0
        return w

    def covers(self, lo: float, hi: float) -> bool:
        eps = 1e-9 * self.step
        return self.start <= lo + eps and self.stop >= hi - eps

    @classmethod
    def cover(
        cls,
        support,
        width: float,
        pad: float = GRID_PAD_WIDTHS,
        points_per_width: float = GRID_POINTS_PER_WIDTH,
        step: float | None = None,
    ) -> "Grid":
        """Grid anchored at the lowest support point, padded by pad widths.

        Anchoring keeps support points (and rectangular window edges) on
        grid nodes whenever their spacing is commensurate with the step.
        """
        support = np.asarray(support, dtype=float)
        lo, hi = float(support.min()), float(support.max())
        if step is None:
            step = width / points_per_width
        n_pad = math.ceil(pad * width / step)
        start = lo - n_pad * step
        n = n_pad + math.ceil((hi - lo) / step - 1e-12) + n_pad + 1
        return cls(start, step, int(n))


@dataclass(frozen=True)
class PointerDistribution:
    """Unnormalized reading density on a grid; norm is its total integral."""

    grid: Grid
    density: np.ndarray
    norm: float

    def __post_init__(self):
        d = np.asarray(self.density, dtype=float)
        if d.shape != (self.grid.n,):
            raise ValueError("density shape must match the grid")
        object.__setattr__(self, "density", d)

    def mean(self) -> float:
        return mean_reading(self)

    def to_json(self) -> str:
        payload = {
            "grid": {"min": self.grid.start, "max": self.grid.stop, "step": self.grid.step},
            "density": self.density.tolist(),
            "norm": self.norm,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "PointerDistribution":
        payload = json.loads(text)
        g = payload["grid"]
        n = int(round((g["max"] - g["min"]) / g["step"])) + 1
        return cls(Grid(g["min"], g["step"], n), np.asarray(payload["density"]), payload["norm"])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["xi", "density"])
            for x, d in zip(self.grid.xs(), self.density):
                writer.writerow([repr(float(x)), repr(float(d))])


def default_grid(
    dist: AmplitudeDistribution,
    profile: PointerProfile,
    step: float | None = None,
    pad: float | None = None,
) -> Grid:
    return Grid.cover(
        dist.support,
        profile.width,
        pad=GRID_PAD_WIDTHS if pad is None else pad,
        step=step,
    )


def final_pointer_state(
    dist: AmplitudeDistribution, profile: PointerProfile, grid: Grid
) -> np.ndarray:
    """Pointer amplitude samples M(xi) = sum_m A_m G(xi - f_m)."""
    lo = float(dist.support.min()) - MIN_PAD_WIDTHS * profile.width
    hi = float(dist.support.max()) + MIN_PAD_WIDTHS * profile.width
    if not grid.covers(lo, hi):
        raise ValueError(
            f"grid [{grid.start}, {grid.stop}] too narrow: needs to span [{lo}, {hi}]"
        )
    xs = grid.xs()
    out = np.zeros(grid.n, dtype=complex)
    for f, a in zip(dist.support, dist.amplitudes):
        out += a * profile.samples(xs - f)
    return out


def reading_distribution(
    chain: MeasurementChain,
    meter: MeterSpec,
    grid: Grid | None = None,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> PointerDistribution:
    """Density of pointer readings conditioned on the chain's final selection."""
    dist = amplitude_distribution(chain, meter.functional, merge_tol)
    if grid is None:
        grid = default_grid(dist, meter.profile)
    amp = final_pointer_state(dist, meter.profile, grid)
    density = np.abs(amp) ** 2
    norm = float(density @ grid.weights())
    return PointerDistribution(grid, density, norm)


def total_reading_distribution(
    chain: MeasurementChain,
    meter: MeterSpec,
    grid: Grid | None = None,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> PointerDistribution:
    """Reading density summed over the full set of final states.

    For a normalized profile this density integrates to one regardless of
    the profile width.
    """
    branches = chain.branches()
    if grid is None:
        dist = amplitude_distribution(branches[0], meter.functional, merge_tol)
        grid = default_grid(dist, meter.profile)
    total = np.zeros(grid.n)
    for branch in branches:
        total += reading_distribution(branch, meter, grid, merge_tol).density
    return PointerDistribution(grid, total, float(total @ grid.weights()))


def mean_reading(p: PointerDistribution) -> float:
    """First moment of the density, integral xi P / integral P."""
    if p.norm <= 0.0:
        raise ValueError("distribution has zero total mass; the mean reading is undefined")
    w = p.grid.weights()
    return float((p.grid.xs() * p.density) @ w / p.norm)


def window_masses(p: PointerDistribution, support) -> dict[float, float]:
    """Integral of the density over the cell around each support point.

    Cell boundaries are the midpoints between neighbouring support points
    (grid ends for the outermost).  For profiles narrower than the smallest
    gap each mass equals the squared modulus of the grouped amplitude;
    with rectangular profiles this is exact to machine precision whenever
    the window edges land on grid nodes, which the default grid arranges
    for supports commensurate with the step.
    """
    support = np.sort(np.asarray(support, dtype=float))
    xs = p.grid.xs()
    halves = (support[:-1] + support[1:]) / 2.0
    bounds = np.concatenate([[xs[0]], halves, [xs[-1]]])
    out: dict[float, float] = {}
    for m, f in enumerate(support):
        i = int(np.searchsorted(xs, bounds[m], side="left"))
        j = int(np.searchsorted(xs, bounds[m + 1], side="right")) - 1
        seg = p.density[i : j + 1]
        seg_w = np.full(seg.size, p.grid.step)
        seg_w[0] = seg_w[-1] = p.grid.step / 2.0
        out[float(f)] = float(seg @ seg_w)
    return out


def conditional_state(chain: MeasurementChain, meter: MeterSpec, xi0: float):
    """System state (unnormalized) right after the interaction, given that
    the pointer reads xi0.  Defined for single-step chains only.

    Re-measuring the projector on this state immediately after the step
    succeeds with certainty, and the post-selected reading density equals
    |<post| U |state>|^2.
    """
    if chain.n_steps != 1:
        raise ValueError("conditional_state is defined for chains with exactly one step")
    step = chain.steps[0]
    values = meter.functional.values(chain)
    entering = step.observable.eigenvectors.conj().T @ (
        chain.propagator.unitary(step.time) @ chain.pre_state.amplitudes
    )
    weights = meter.profile.samples(xi0 - values)
    amps = step.observable.eigenvectors @ (weights * entering)
    return StateVector(amps)


@dataclass(frozen=True)
class JointDistribution:
    """Reading density of several pointers coupled to one chain."""

    grids: tuple[Grid, ...]
    density: np.ndarray
    norm: float

    def __post_init__(self):
        d = np.asarray(self.density, dtype=float)
        if d.shape != tuple(g.n for g in self.grids):
            raise ValueError("density shape must match the grids")
        object.__setattr__(self, "density", d)
        object.__setattr__(self, "grids", tuple(self.grids))

    @property
    def n_axes(self) -> int:
        return len(self.grids)

    def marginal(self, axis: int) -> PointerDistribution:
        """Integrate out every other axis."""
        density = self.density
        for other in range(self.n_axes - 1, -1, -1):
            if other == axis:
                continue
            density = np.tensordot(density, self.grids[other].weights(), axes=([other], [0]))
        norm = float(density @ self.grids[axis].weights())
        return PointerDistribution(self.grids[axis], density, norm)

    def marginal_mean(self, axis: int) -> float:
        return mean_reading(self.marginal(axis))

    def restricted(self, axis: int, lo: float, hi: float) -> "JointDistribution":
        """Integrate the given axis over [lo, hi], dropping it.

        The result is the joint density of the remaining pointers for runs
        whose axis reading fell inside the window.
        """
        if self.n_axes < 2:
            raise ValueError("cannot restrict the only axis")
        g = self.grids[axis]
        xs = g.xs()
        mask = (xs >= lo) & (xs <= hi)
        if not mask.any():
            raise ValueError("restriction window contains no grid points")
        idx = np.flatnonzero(mask)
        w = np.full(idx.size, g.step)
        w[0] = w[-1] = g.step / 2.0
        sliced = np.take(self.density, idx, axis=axis)
        density = np.tensordot(sliced, w, axes=([axis], [0]))
        grids = tuple(gr for i, gr in enumerate(self.grids) if i != axis)
        norm = density
        for i in range(len(grids) - 1, -1, -1):
            norm = np.tensordot(norm, grids[i].weights(), axes=([i], [0]))
        return JointDistribution(grids, density, float(norm))


def joint_reading_distribution(
    chain: MeasurementChain,
    meters: list[MeterSpec],
    grids: list[Grid] | None = None,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> JointDistribution:
    """Joint density of several pointer readings,

        P(xi_1, ..., xi_R) = | sum_paths A[path] prod_r G_r(xi_r - F_r[path]) |^2.

    With a single meter this reduces exactly to reading_distribution.
    """
    if not meters:
        raise ValueError("need at least one meter")
    amps = path_amplitudes(chain)
    all_values = [m.functional.values(chain) for m in meters]
    if grids is None:
        grids = [
            Grid.cover(group_support(vals, merge_tol), m.profile.width)
            for m, vals in zip(meters, all_values)
        ]
    if len(grids) != len(meters):
        raise ValueError("need one grid per meter")
    for m, vals, grid in zip(meters, all_values, grids):
        lo = vals.min() - MIN_PAD_WIDTHS * m.profile.width
        hi = vals.max() + MIN_PAD_WIDTHS * m.profile.width
        if not grid.covers(lo, hi):
            raise ValueError(f"grid [{grid.start}, {grid.stop}] too narrow: needs [{lo}, {hi}]")

    shape = tuple(g.n for g in grids)
    pointer = np.zeros(shape, dtype=complex)
    for p, a in enumerate(amps):
        if a == 0:
            continue
        factors = [
            m.profile.samples(g.xs() - vals[p])
            for m, vals, g in zip(meters, all_values, grids)
        ]
        term = factors[0].astype(complex)
        for f in factors[1:]:
            term = np.multiply.outer(term, f)
        pointer += a * term
    density = np.abs(pointer) ** 2
    norm = density
    for i in range(len(grids) - 1, -1, -1):
        norm = np.tensordot(norm, grids[i].weights(), axes=([i], [0]))
    return JointDistribution(tuple(grids), density, float(norm))


def group_support(values: np.ndarray, merge_tol: float = DEFAULT_MERGE_TOL) -> np.ndarray:
    """Distinct functional values up to the merge tolerance."""
    sorted_vals = np.sort(np.asarray(values, dtype=float))
    boundaries = np.flatnonzero(np.diff(sorted_vals) > merge_tol) + 1
    segments = np.concatenate([[0], boundaries])
    return sorted_vals[segments]


def strong_limit_bins(
    chain: MeasurementChain,
    functional: PathFunctional,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> dict[float, float]:
    """Exact reading masses in the accurate limit: |A(f_m)|^2 per value.

    Equals the window masses of a rectangular-profile reading distribution
    whenever the width is below the smallest support gap.
    """
    dist = amplitude_distribution(chain, functional, merge_tol)
    return {float(f): float(abs(a) ** 2) for f, a in zip(dist.support, dist.amplitudes)}


def strong_limit_probabilities(
    chain: MeasurementChain,
    functional: PathFunctional,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> dict[float, float]:
    """Strong-limit bins normalized over the selected branch."""
    bins = strong_limit_bins(chain, functional, merge_tol)
    total = sum(bins.values())
    if total <= 0.0:
        raise ValueError("all bins vanish; no reading survives the selection")
    return {f: p / total for f, p in bins.items()}


@dataclass(frozen=True)
class WeakLimitReport:
    """Mean readings over a sweep of profile widths, against the wide limit."""

    widths: tuple[float, ...]
    means: tuple[float, ...]
    weak: complex

    @property
    def limit(self) -> float:
        return self.weak.real

    @property
    def errors(self) -> tuple[float, ...]:
        return tuple(abs(m - self.limit) for m in self.means)

    @property
    def monotone(self) -> bool:
        errs = self.errors
        return all(b < a for a, b in zip(errs, errs[1:]))


def weak_limit_report(
    chain: MeasurementChain,
    functional: PathFunctional,
    widths,
    merge_tol: float = DEFAULT_MERGE_TOL,
) -> WeakLimitReport:
    """Gaussian-meter mean readings for increasing widths.

    The error against the real part of the amplitude-weighted mean is
    expected (and observed) to shrink as the width grows; no rate is
    claimed.
    """
    widths = tuple(float(w) for w in widths)
    if any(w2 <= w1 for w1, w2 in zip(widths, widths[1:])):
        raise ValueError("widths must be strictly increasing")
    weak = weak_value(chain, functional, merge_tol)
    means = []
    for w in widths:
        meter = MeterSpec(functional, PointerProfile.gaussian(w))
        means.append(mean_reading(reading_distribution(chain, meter, merge_tol=merge_tol)))
    return WeakLimitReport(widths, tuple(means), weak)
