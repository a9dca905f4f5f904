"""Uniform linear array data model: steering vectors and snapshot synthesis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array.

    Args:
        element_count: Number of sensors M (at least 2).
        spacing_over_wavelength: Inter-element spacing in wavelengths, d/λ.
    """

    element_count: int = 8
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if int(self.element_count) != self.element_count or self.element_count < 2:
            raise ValueError(f"element_count must be an integer >= 2, got {self.element_count}")
        if not self.spacing_over_wavelength > 0:
            raise ValueError("spacing_over_wavelength must be positive")


@dataclass(frozen=True)
class Scenario:
    """Narrowband far-field sources observed in white noise.

    ``snr_db`` is the per-source, per-element ratio of unit source power to the
    noise power, i.e. the noise variance is ``10 ** (-snr_db / 10)``.
    """

    true_doas_deg: tuple[float, ...]
    snr_db: float
    snapshot_count: int

    def __post_init__(self):
        doas = tuple(float(t) for t in self.true_doas_deg)
        object.__setattr__(self, "true_doas_deg", doas)
        if not doas:
            raise ValueError("at least one source is required")
        for t in doas:
            _check_angle(t)
        if any(b <= a for a, b in zip(doas, doas[1:])):
            raise ValueError("true_doas_deg must be strictly ascending")
        if int(self.snapshot_count) != self.snapshot_count or self.snapshot_count < 1:
            raise ValueError("snapshot_count must be a positive integer")

    @property
    def source_count(self) -> int:
        return len(self.true_doas_deg)


def _check_angle(theta_deg):
    theta = np.asarray(theta_deg, dtype=float)
    if not np.all(np.isfinite(theta)) or np.any(np.abs(theta) >= 90.0):
        raise ValueError(f"angles must lie in the open interval (-90, 90) degrees: {theta_deg}")


def steering_vector(theta_deg: float, geom: ArrayGeometry) -> np.ndarray:
    """Array response ``exp(j 2π (d/λ) m sin θ)`` for m = 0..M-1."""
    _check_angle(theta_deg)
    return manifold_matrix([theta_deg], geom)[:, 0]


def manifold_matrix(thetas_deg: Sequence[float], geom: ArrayGeometry) -> np.ndarray:
    """Stack steering vectors as columns, giving an M x P matrix.

    Duplicate angles are allowed; the result is then rank deficient.
    """
    thetas = np.atleast_1d(np.asarray(thetas_deg, dtype=float))
    if thetas.ndim != 1 or thetas.size == 0:
        raise ValueError("thetas_deg must be a nonempty 1-D sequence")
    _check_angle(thetas)
    m = np.arange(geom.element_count)[:, None]
    phase = 2 * np.pi * geom.spacing_over_wavelength * m * np.sin(np.deg2rad(thetas))[None, :]
    return np.exp(1j * phase)


def derive_seed(base_seed: int, trial_index: int) -> np.random.SeedSequence:
    """Per-trial seed: numpy's SeedSequence hash of ``(base_seed, trial_index)``.

    Trials can therefore be generated in any order or process and still agree.
    """
    return np.random.SeedSequence(int(base_seed), spawn_key=(int(trial_index),))


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator from an int or SeedSequence."""
    return np.random.Generator(np.random.PCG64(seed))


def _circular_gaussian(rng, shape, power):
    scale = np.sqrt(power / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synthesize_snapshots(scenario: Scenario, geom: ArrayGeometry, seed,
                         noiseless: bool = False) -> np.ndarray:
    """Generate the M x N snapshot matrix ``X = A S + W``.

    Sources are mutually uncorrelated, zero-mean circular complex Gaussian with
    unit power. Noise is white circular complex Gaussian with variance
    ``10 ** (-snr_db / 10)`` per element.

    Args:
        scenario: Source directions, SNR and snapshot count.
        geom: Array geometry.
        seed: ``int`` or :class:`numpy.random.SeedSequence`. The same seed
            reproduces the same matrix bit for bit.
        noiseless: If True the noise term is exactly zero (the noise draw is
            still consumed so the source signals match the noisy case).

    Returns:
        Complex array of shape (M, N).
    """
    signal, noise = synthesize_components(scenario, geom, seed)
    if noiseless:
        return signal
    return signal + noise


def synthesize_components(scenario: Scenario, geom: ArrayGeometry, seed):
    """Return the signal part ``A S`` and noise part ``W`` separately."""
    P = scenario.source_count
    if P >= geom.element_count:
        raise ValueError(f"need fewer sources ({P}) than elements ({geom.element_count})")
    N = scenario.snapshot_count
    rng = make_rng(seed)
    A = manifold_matrix(scenario.true_doas_deg, geom)
    S = _circular_gaussian(rng, (P, N), 1.0)
    W = _circular_gaussian(rng, (geom.element_count, N), noise_power(scenario.snr_db))
    return A @ S, W


def noise_power(snr_db: float) -> float:
    return 10.0 ** (-float(snr_db) / 10.0)
