"""MUSIC pseudospectrum on an angular grid and peak selection.

The spectrum is parameterized by a signal-subspace projector ``P_s`` rather
than a noise eigenbasis, so any orthonormal signal basis (estimated or refined)
can be scored directly via ``1 / (a^H (I - P_s) a)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .array_model import ArrayGeometry, manifold_matrix

DENOMINATOR_FLOOR = 1e-12
PROJECTOR_TOL = 1e-6


@dataclass(frozen=True)
class AngularGrid:
    """Inclusive search grid ``start, start + step, ..., stop`` in degrees."""

    start_deg: float = -89.9
    stop_deg: float = 89.9
    step_deg: float = 0.1

    def __post_init__(self):
        if not self.step_deg > 0:
            raise ValueError("grid step must be positive")
        if not self.start_deg < self.stop_deg:
            raise ValueError("grid start must be below grid stop")
        if (self.stop_deg - self.start_deg) / self.step_deg < 10:
            raise ValueError("grid must contain at least 11 points")
        if self.start_deg <= -90 or self.stop_deg >= 90:
            raise ValueError("grid must lie inside (-90, 90) degrees")

    def angles(self) -> np.ndarray:
        return _grid_angles(self).copy()


@lru_cache(maxsize=32)
def _grid_angles(grid: AngularGrid) -> np.ndarray:
    n = int(np.floor((grid.stop_deg - grid.start_deg) / grid.step_deg + 1e-9)) + 1
    # rounding keeps grid points like 30.0 exact after repeated additions
    angles = np.round(grid.start_deg + grid.step_deg * np.arange(n), 10)
    angles.setflags(write=False)
    return angles


@lru_cache(maxsize=32)
def _grid_manifold(geom: ArrayGeometry, grid: AngularGrid) -> np.ndarray:
    A = manifold_matrix(_grid_angles(grid), geom)
    A.setflags(write=False)
    return A


@dataclass(frozen=True)
class Spectrum:
    angles_deg: np.ndarray
    values: np.ndarray


class DoaEstimate(NamedTuple):
    angles_deg: np.ndarray
    degraded: bool


def pseudospectrum(signal_projector: np.ndarray, geom: ArrayGeometry,
                   grid: AngularGrid) -> Spectrum:
    """Evaluate the MUSIC pseudospectrum at every grid angle.

    The denominator ``a^H (I - P_s) a`` is floored at 1e-12, so the largest
    possible value is 1e12.

    Raises:
        ValueError: if the projector is not idempotent or its rank is not
            strictly between 0 and M.
    """
    Ps = np.asarray(signal_projector)
    M = geom.element_count
    if Ps.shape != (M, M):
        raise ValueError(f"projector must be {M}x{M}, got {Ps.shape}")
    if np.linalg.norm(Ps @ Ps - Ps) > PROJECTOR_TOL * max(1.0, np.linalg.norm(Ps)):
        raise ValueError("signal projector is not idempotent")
    rank = int(round(np.trace(Ps).real))
    if not 0 < rank < M:
        raise ValueError(f"projector rank must be in (0, {M}), got {rank}")
    A = _grid_manifold(geom, grid)
    Pn = np.eye(M) - Ps
    denom = np.einsum("mk,mk->k", A.conj(), Pn @ A).real
    values = 1.0 / np.maximum(denom, DENOMINATOR_FLOOR)
    return Spectrum(_grid_angles(grid), values)


def pick_peaks(spectrum: Spectrum, P: int) -> DoaEstimate:
    """Select the P largest strict local maxima, returned in ascending angle.

    A boundary point is a maximum if it exceeds its single neighbour. Equal
    values are ranked lower-angle first. With fewer than P maxima the
    remainder is filled from the largest non-peak values and the estimate is
    flagged ``degraded``.
    """
    v = np.asarray(spectrum.values, dtype=float)
    angles = np.asarray(spectrum.angles_deg, dtype=float)
    if v.size == 0:
        raise ValueError("empty spectrum")
    if P < 1:
        raise ValueError("P must be at least 1")

    is_peak = np.ones(v.size, dtype=bool)
    if v.size > 1:
        is_peak[1:] &= v[1:] > v[:-1]
        is_peak[:-1] &= v[:-1] > v[1:]

    idx = np.arange(v.size)
    # lexsort: last key is primary -> descending value, then ascending index
    ranked_peaks = idx[is_peak][np.lexsort((idx[is_peak], -v[is_peak]))]
    chosen = list(ranked_peaks[:P])
    degraded = len(chosen) < P
    if degraded:
        rest = idx[~is_peak]
        ranked_rest = rest[np.lexsort((rest, -v[rest]))]
        chosen.extend(ranked_rest[: P - len(chosen)])
    return DoaEstimate(np.sort(angles[np.asarray(chosen, dtype=int)]), degraded)


def estimate_doa(signal_projector: np.ndarray, geom: ArrayGeometry,
                 grid: AngularGrid, P: int) -> DoaEstimate:
    return pick_peaks(pseudospectrum(signal_projector, geom, grid), P)
