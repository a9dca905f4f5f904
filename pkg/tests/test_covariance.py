import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_unitary
from ssrefine.array_model import ArrayGeometry, Scenario, manifold_matrix, synthesize_snapshots
from ssrefine.covariance import eigendecompose, partition_subspaces, projector, sample_covariance


def test_single_snapshot_outer_product(rng):
    x = rng.standard_normal((6, 1)) + 1j * rng.standard_normal((6, 1))
    np.testing.assert_allclose(sample_covariance(x), x @ x.conj().T, atol=1e-14)


def test_zero_snapshots_give_zero_covariance():
    assert np.array_equal(sample_covariance(np.zeros((4, 10), complex)), np.zeros((4, 4)))


def test_empty_snapshots_rejected():
    with pytest.raises(ValueError):
        sample_covariance(np.zeros((4, 0)))


@given(st.integers(0, 2**32 - 1))
def test_exactly_hermitian(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
    R = sample_covariance(X)
    assert np.linalg.norm(R - R.conj().T) == 0


def test_identity_and_diagonal():
    eig = eigendecompose(np.eye(5))
    np.testing.assert_allclose(eig.eigenvalues, 1.0)
    U = eig.eigenvectors
    np.testing.assert_allclose(U @ U.conj().T, np.eye(5), atol=1e-12)
    eig = eigendecompose(np.diag([1.0, 4.0]))
    np.testing.assert_allclose(eig.eigenvalues, [4.0, 1.0])


def test_known_spectrum_recovered(rng):
    V = random_unitary(rng, 8)
    d = np.sort(rng.uniform(0.1, 10, 8))[::-1]
    R = V @ np.diag(d) @ V.conj().T
    eig = eigendecompose(R)
    np.testing.assert_allclose(eig.eigenvalues, d, rtol=1e-10)
    U = eig.eigenvectors
    assert np.linalg.norm(R - U @ np.diag(eig.eigenvalues) @ U.conj().T) < 1e-7 * np.linalg.norm(R)
    assert np.linalg.norm(U.conj().T @ U - np.eye(8)) < 1e-8


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        eigendecompose(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_negative_roundoff_clamped():
    R = np.diag([2.0, -1e-14])
    assert eigendecompose(R).eigenvalues[-1] == 0.0


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_trace_and_ordering(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((6, 20)) + 1j * rng.standard_normal((6, 20))
    R = sample_covariance(X)
    w = eigendecompose(R).eigenvalues
    assert np.all(np.diff(w) <= 0)
    assert abs(w.sum() - np.trace(R).real) <= 1e-9 * abs(np.trace(R).real)


def test_partition_shapes_and_range(rng):
    eig = eigendecompose(sample_covariance(rng.standard_normal((8, 30)) + 0j))
    sp = partition_subspaces(eig, 3)
    assert sp.signal_basis.shape == (8, 3)
    assert sp.noise_basis.shape == (8, 5)
    assert sp.signal_eigenvalues.shape == (3,)
    for bad in (0, 8):
        with pytest.raises(ValueError):
            partition_subspaces(eig, bad)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_projector_properties(seed, P):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((8, 40)) + 1j * rng.standard_normal((8, 40))
    sp = partition_subspaces(eigendecompose(sample_covariance(X)), P)
    Ps, Pn = projector(sp.signal_basis), projector(sp.noise_basis)
    assert np.linalg.norm(Ps @ Ps - Ps) < 1e-8
    assert np.linalg.norm(Ps + Pn - np.eye(8)) < 1e-8
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, P))
    assert np.linalg.norm(projector(sp.signal_basis * phases) - Ps) < 1e-10


def test_noiseless_signal_subspace_equals_manifold_span():
    geom = ArrayGeometry(8)
    sc = Scenario((15, 30, 45), 0.0, 200)
    X = synthesize_snapshots(sc, geom, 5, noiseless=True)
    sp = partition_subspaces(eigendecompose(sample_covariance(X)), 3)
    Q, _ = np.linalg.qr(manifold_matrix(sc.true_doas_deg, geom))
    assert np.linalg.norm(projector(sp.signal_basis) - projector(Q)) < 1e-8
