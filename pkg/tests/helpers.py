"""Shared generators and independent oracles for the test suite.

The oracles deliberately avoid the package's own code paths: the matrix
exponential check goes through scipy, mean readings through the Gaussian
overlap closed form, and joint densities through plain nested loops.
"""

import numpy as np

from qpathnet import (
    MeasurementChain,
    MeasurementStep,
    Observable,
    Propagator,
    StateVector,
)


def random_state_vector(rng, dim):
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(amps / np.linalg.norm(amps))


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2.0


def random_unitary(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_observable(rng, dim, eigenvalues=None):
    if eigenvalues is None:
        return Observable.from_matrix(random_hermitian(rng, dim))
    return Observable.from_eigensystem(eigenvalues, random_unitary(rng, dim))


def random_chain(rng, dim, n_steps, zero_h=False, eigenvalues=None, total_time=1.0):
    prop = Propagator.free(dim) if zero_h else Propagator(random_hermitian(rng, dim))
    times = np.sort(rng.uniform(0.05, 0.95, size=n_steps)) * total_time
    while n_steps > 1 and np.min(np.diff(times)) < 1e-3:
        times = np.sort(rng.uniform(0.05, 0.95, size=n_steps)) * total_time
    steps = tuple(
        MeasurementStep(float(t), random_observable(rng, dim, eigenvalues)) for t in times
    )
    return MeasurementChain(
        random_state_vector(rng, dim), steps, prop, random_state_vector(rng, dim), total_time
    )


def gaussian_overlap_mean(support, amps, width):
    """Closed-form mean reading for a Gaussian profile.

    With G^2 a normal density of standard deviation `width`, the overlap of
    two shifted profiles is exp(-(f_m - f_n)^2 / (8 width^2)), so both
    moments of |sum_m A_m G(xi - f_m)|^2 reduce to finite double sums.
    """
    support = np.asarray(support, dtype=float)
    amps = np.asarray(amps, dtype=complex)
    overlap = np.exp(-((support[:, None] - support[None, :]) ** 2) / (8.0 * width**2))
    pair_re = np.real(amps[:, None] * np.conj(amps[None, :]))
    midpoints = (support[:, None] + support[None, :]) / 2.0
    return float((pair_re * midpoints * overlap).sum() / (pair_re * overlap).sum())


def gaussian_overlap_norm(support, amps, width):
    """Closed-form total mass of the reading density for a Gaussian profile."""
    support = np.asarray(support, dtype=float)
    amps = np.asarray(amps, dtype=complex)
    overlap = np.exp(-((support[:, None] - support[None, :]) ** 2) / (8.0 * width**2))
    pair_re = np.real(amps[:, None] * np.conj(amps[None, :]))
    return float((pair_re * overlap).sum())


def brute_force_joint_density(amps, value_table, profiles, axes):
    """Joint reading density by explicit loops over paths and grid points."""
    shape = tuple(len(a) for a in axes)
    pointer = np.zeros(shape, dtype=complex)
    for idx in np.ndindex(*shape):
        total = 0.0 + 0.0j
        for p, a in enumerate(amps):
            term = a
            for r, profile in enumerate(profiles):
                term *= profile.samples(np.array([axes[r][idx[r]] - value_table[r][p]]))[0]
            total += term
        pointer[idx] = total
    return np.abs(pointer) ** 2
