"""Supervised signal-subspace refinement.

Pipeline for one trial:

1. ``B`` -- fuzzy similarity of the covariance eigenvalues,
   ``b_ij = 1 - |xi_i - xi_j| * tau`` with ``tau = 1 / (1 + max(xi) - min(xi))``.
2. ``Omega`` -- least-squares solution of ``B @ Omega = U_hat`` (computed once).
3. For each modification factor ``mu``: ``B_bar = 1 / (1 + exp(mu * (B - 0.5)))``,
   refined signal basis = orthonormalized first P columns of ``B_bar @ Omega``,
   MUSIC on that basis gives DOAs, and the cost ``J(mu)`` is the projector
   distance between the refined basis and the basis rebuilt from those DOAs.
4. Keep the ``mu`` with the smallest ``J``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .array_model import ArrayGeometry, manifold_matrix
from .covariance import projector
from .music import AngularGrid, estimate_doa

RANK_RTOL = 1e-10
ORTHONORMAL_TOL = 1e-6
TIE_TOL = 1e-12


class DegenerateRefinement(ValueError):
    """A refinement step produced a rank-deficient basis."""


class SingularSimilarity(DegenerateRefinement):
    """The similarity matrix is numerically singular; carries its condition number."""

    def __init__(self, condition: float):
        super().__init__(f"similarity matrix is rank deficient (condition number {condition:.3g})")
        self.condition = condition


class RefinementFailed(RuntimeError):
    """Every modification factor on the search grid was skipped."""


class MuEvaluation(NamedTuple):
    cost: float
    doas_deg: np.ndarray
    degraded: bool


@dataclass
class RefinementResult:
    """Outcome of a modification-factor sweep.

    ``j_trace`` and ``re_trace`` hold ``(mu, value)`` for every grid point in
    grid order; skipped points carry ``nan``. ``re_trace`` is the same
    quantity as ``j_trace`` (the reconstruction error at that mu's own DOAs).
    """

    best_mu: float
    refined_doas_deg: np.ndarray
    best_degraded: bool
    j_trace: list = field(default_factory=list)
    re_trace: list = field(default_factory=list)
    doas_per_mu: dict = field(default_factory=dict)
    degraded_per_mu: dict = field(default_factory=dict)
    skipped_mus: list = field(default_factory=list)

    @property
    def best_cost(self) -> float:
        return dict(self.j_trace)[self.best_mu]


def similarity_matrix(eigenvalues) -> np.ndarray:
    """Fuzzy similarity matrix of an eigenvalue vector.

    Entries lie in (0, 1], the diagonal is exactly 1 and the matrix is exactly
    symmetric.
    """
    xi = np.asarray(eigenvalues, dtype=float)
    if xi.ndim != 1 or xi.size < 2:
        raise ValueError("need at least two eigenvalues")
    if not np.all(np.isfinite(xi)):
        raise ValueError("eigenvalues must be finite")
    tau = 1.0 / (1.0 + xi.max() - xi.min())
    return 1.0 - np.abs(xi[:, None] - xi[None, :]) * tau


def transform_matrix(B: np.ndarray, U_hat: np.ndarray) -> np.ndarray:
    """Least-squares ``Omega`` with ``B @ Omega ~= U_hat``.

    ``B`` is real symmetric, so ``B^T`` in the normal equations is also
    ``B^H``. Solved with an SVD-based least-squares routine rather than by
    forming ``B^T B``.

    Raises:
        SingularSimilarity: smallest singular value of ``B`` is at or below
            1e-10 times the largest.
    """
    B = np.asarray(B, dtype=float)
    s = np.linalg.svd(B, compute_uv=False)
    if s[-1] <= RANK_RTOL * s[0]:
        raise SingularSimilarity(np.inf if s[-1] == 0 else s[0] / s[-1])
    Omega, *_ = np.linalg.lstsq(B, U_hat, rcond=None)
    return Omega


def modify_similarity(B: np.ndarray, mu: float) -> np.ndarray:
    """Elementwise ``1 / (1 + exp(mu * (b - 0.5)))``."""
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    return expit(-mu * (np.asarray(B, dtype=float) - 0.5))


def _orthonormalize(V: np.ndarray) -> np.ndarray:
    """Polar factor ``V (V^H V)^{-1/2}``; same span, orthonormal columns."""
    W, s, Zh = np.linalg.svd(V, full_matrices=False)
    if s[-1] <= RANK_RTOL * s[0]:
        raise DegenerateRefinement(
            f"basis has numerical rank below {V.shape[1]} (singular values {s[0]:.3g}..{s[-1]:.3g})")
    return W @ Zh


def refined_eigenspace(B_bar: np.ndarray, Omega: np.ndarray, P: int) -> np.ndarray:
    """Orthonormal basis for the first P columns of ``B_bar @ Omega``.

    Columns of ``Omega`` follow the descending eigenvalue order of ``U_hat``,
    so the first P columns are the signal part.
    """
    M = Omega.shape[0]
    if not 1 <= P < M:
        raise ValueError(f"P must satisfy 1 <= P < {M}")
    return _orthonormalize(B_bar @ Omega[:, :P])


def reconstruct_signal_subspace(thetas_deg, geom: ArrayGeometry) -> np.ndarray:
    """``A (A^H A)^{-1/2}`` for the manifold matrix of the given angles.

    The principal inverse square root makes this the polar factor of ``A``,
    computed here from its SVD.
    """
    return _orthonormalize(manifold_matrix(thetas_deg, geom))


def _check_orthonormal(U, name):
    k = U.shape[1]
    if np.linalg.norm(U.conj().T @ U - np.eye(k)) > ORTHONORMAL_TOL:
        raise ValueError(f"{name} does not have orthonormal columns")


def reconstruction_error(Us_a: np.ndarray, Us_b: np.ndarray) -> float:
    """Frobenius distance between the projectors of two orthonormal bases."""
    _check_orthonormal(Us_a, "Us_a")
    _check_orthonormal(Us_b, "Us_b")
    return float(np.linalg.norm(projector(Us_a) - projector(Us_b)))


def cost_at_mu(mu: float, B: np.ndarray, Omega: np.ndarray, geom: ArrayGeometry,
               grid: AngularGrid, P: int) -> MuEvaluation:
    """Reconstruction cost and DOA estimate for one modification factor.

    Raises:
        DegenerateRefinement: the refined or reconstructed basis is rank
            deficient (always the case for ``mu = 0`` with P >= 2).
    """
    V = refined_eigenspace(modify_similarity(B, mu), Omega, P)
    est = estimate_doa(projector(V), geom, grid, P)
    U_rec = reconstruct_signal_subspace(est.angles_deg, geom)
    return MuEvaluation(reconstruction_error(U_rec, V), est.angles_deg, est.degraded)


def mu_grid(mu_start: float, mu_stop: float, mu_step: float) -> np.ndarray:
    """Inclusive grid of modification factors."""
    if not mu_step > 0:
        raise ValueError("mu_step must be positive")
    if mu_start > mu_stop:
        raise ValueError("mu_start must not exceed mu_stop")
    if mu_start < 0:
        raise ValueError("mu must be nonnegative")
    n = int(np.floor((mu_stop - mu_start) / mu_step + 1e-9)) + 1
    return np.round(mu_start + mu_step * np.arange(n), 10)


def search_mu(mu_start: float, mu_stop: float, mu_step: float, B: np.ndarray,
              Omega: np.ndarray, geom: ArrayGeometry, grid: AngularGrid,
              P: int) -> RefinementResult:
    """Exhaustive search for the modification factor with the smallest cost.

    Degenerate grid points are recorded in ``skipped_mus`` and never abort
    the sweep. Costs within 1e-12 of the minimum count as ties and the
    smallest such mu wins.

    Raises:
        RefinementFailed: every grid point was degenerate.
    """
    j_trace, doas, degraded, skipped = [], {}, {}, []
    for mu in mu_grid(mu_start, mu_stop, mu_step):
        mu = float(mu)
        try:
            ev = cost_at_mu(mu, B, Omega, geom, grid, P)
        except DegenerateRefinement:
            skipped.append(mu)
            j_trace.append((mu, float("nan")))
            continue
        j_trace.append((mu, ev.cost))
        doas[mu] = ev.doas_deg
        degraded[mu] = ev.degraded
    if not doas:
        raise RefinementFailed(f"all {len(j_trace)} modification factors were degenerate")
    j_min = min(doas_cost for mu, doas_cost in j_trace if mu in doas)
    best_mu = next(mu for mu, c in j_trace if mu in doas and c <= j_min + TIE_TOL)
    return RefinementResult(
        best_mu=best_mu,
        refined_doas_deg=doas[best_mu],
        best_degraded=degraded[best_mu],
        j_trace=j_trace,
        re_trace=list(j_trace),
        doas_per_mu=doas,
        degraded_per_mu=degraded,
        skipped_mus=skipped,
    )
