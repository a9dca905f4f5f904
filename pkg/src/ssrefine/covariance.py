"""Sample covariance, Hermitian eigendecomposition and subspace partition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-8


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs of a Hermitian PSD matrix, eigenvalues in descending order.

    Column ``m`` of ``eigenvectors`` belongs to ``eigenvalues[m]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class SubspacePair:
    signal_basis: np.ndarray
    noise_basis: np.ndarray
    signal_eigenvalues: np.ndarray
    noise_eigenvalues: np.ndarray

    @property
    def signal_projector(self) -> np.ndarray:
        return projector(self.signal_basis)


def sample_covariance(X: np.ndarray) -> np.ndarray:
    """``(1/N) X X^H``, made exactly Hermitian."""
    X = np.asarray(X)
    if X.ndim != 2 or X.size == 0:
        raise ValueError("snapshot matrix must be a nonempty 2-D array")
    R = X @ X.conj().T / X.shape[1]
    return (R + R.conj().T) / 2


def eigendecompose(R: np.ndarray) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix, sorted by decreasing eigenvalue.

    Negative eigenvalues from roundoff are clamped to zero. Ties keep the
    solver's original index order so the result is deterministic.
    """
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, np.linalg.norm(R))
    if np.linalg.norm(R - R.conj().T) > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian")
    w, U = np.linalg.eigh(R)
    order = np.argsort(-w, kind="stable")
    w = np.clip(w[order], 0.0, None)
    return EigenSystem(eigenvalues=w, eigenvectors=U[:, order])


def partition_subspaces(eig: EigenSystem, P: int) -> SubspacePair:
    """Split into the P-dimensional signal part and the (M-P)-dimensional noise part."""
    M = eig.size
    if not 1 <= P < M:
        raise ValueError(f"source count must satisfy 1 <= P < {M}, got {P}")
    U, w = eig.eigenvectors, eig.eigenvalues
    return SubspacePair(U[:, :P], U[:, P:], w[:P], w[P:])


def projector(U: np.ndarray) -> np.ndarray:
    """Orthogonal projector ``U U^H`` onto the span of orthonormal columns."""
    return U @ U.conj().T
