import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import random_hermitian
from dephwork.operators import (
    EigensolverError,
    NonHermitianError,
    SpectralDecomposition,
    cluster_values,
    commutator,
    density,
    eig_hermitian,
    hermitian,
    operator_function,
    partial_trace_env,
    projector,
    tensor_product,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def test_hermitian_rejects_asymmetric():
    with pytest.raises(NonHermitianError):
        hermitian([[0, 1], [0.5, 0]])
    with pytest.raises(ValueError):
        hermitian(np.ones((2, 3)))
    with pytest.raises(ValueError):
        hermitian([[np.nan, 0], [0, 1]])


def test_hermitian_is_readonly_copy():
    a = np.eye(2)
    h = hermitian(a)
    a[0, 0] = 5
    assert h[0, 0] == 1
    with pytest.raises(ValueError):
        h[0, 0] = 2


def test_density_checks():
    density(np.diag([0.3, 0.7]))
    with pytest.raises(ValueError):
        density(np.diag([0.5, 0.6]))
    with pytest.raises(ValueError):
        density(np.diag([1.2, -0.2]))


def test_tensor_identity_and_convention():
    assert np.allclose(tensor_product(np.eye(2), np.eye(3)), np.eye(6))
    assert np.allclose(tensor_product(SZ, np.eye(2)), np.diag([1, 1, -1, -1]))


def test_tensor_block_diagonal_entrywise(rng):
    b0, b1 = random_hermitian(rng, 3), random_hermitian(rng, 3)
    h = tensor_product(projector(0, 2), b0) + tensor_product(projector(1, 2), b1)
    expect = np.zeros((6, 6), dtype=complex)
    for i in range(3):
        for j in range(3):
            expect[i, j] = b0[i, j]
            expect[3 + i, 3 + j] = b1[i, j]
    assert np.array_equal(h, expect)


def test_tensor_requires_square():
    with pytest.raises(ValueError):
        tensor_product(np.ones((2, 3)), np.eye(2))


def test_eig_diag_permutation():
    s = eig_hermitian(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(s.eigenvalues, [1, 2, 3])
    assert np.allclose(np.abs(s.eigenvectors), np.eye(3)[:, [1, 2, 0]])


def test_eig_pauli_x():
    s = eig_hermitian(SX)
    assert np.allclose(s.eigenvalues, [-1, 1])
    assert np.allclose(np.abs(s.eigenvectors), np.full((2, 2), 2 ** -0.5))
    # phase convention: first non-negligible component is real positive
    assert np.all(s.eigenvectors[0].real > 0) and np.allclose(s.eigenvectors[0].imag, 0)


def test_eig_reconstruction(rng):
    a = random_hermitian(rng, 8)
    s = eig_hermitian(a)
    assert np.max(np.abs(s.reconstruct() - a)) < 1e-10
    assert np.allclose(s.eigenvectors.conj().T @ s.eigenvectors, np.eye(8))


def test_eig_deterministic(rng):
    a = random_hermitian(rng, 6)
    s1, s2 = eig_hermitian(a), eig_hermitian(a.copy())
    assert np.array_equal(s1.eigenvectors, s2.eigenvectors)


def test_eig_failure_reports_norm(monkeypatch):
    def boom(_):
        raise np.linalg.LinAlgError("no convergence")
    monkeypatch.setattr(np.linalg, "eigh", boom)
    with pytest.raises(EigensolverError, match="max"):
        eig_hermitian(np.eye(2))


def test_operator_function_cases(rng):
    a = random_hermitian(rng, 5)
    assert np.max(np.abs(operator_function(eig_hermitian(a), lambda x: x) - a)) < 1e-10
    out = operator_function(eig_hermitian(np.diag([0.0, np.log(2)])), lambda x: np.exp(-x))
    assert np.allclose(out, np.diag([1.0, 0.5]))


def test_operator_function_normalized_no_overflow():
    s = SpectralDecomposition(np.array([0.0, 1.0]), np.eye(2, dtype=complex))
    rho = operator_function(s, lambda x: -1e4 * x, normalize=True)
    assert np.allclose(rho, np.diag([1.0, 0.0]))


def test_partial_trace_cases(rng):
    r_s = np.diag([0.25, 0.75]).astype(complex)
    r_b = np.diag([0.1, 0.2, 0.7]).astype(complex)
    assert np.max(np.abs(partial_trace_env(np.kron(r_s, r_b), 2, 3) - r_s)) < 1e-12
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(partial_trace_env(np.outer(bell, bell), 2, 2), np.eye(2) / 2)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    assert abs(np.trace(partial_trace_env(rho, 2, 3)) - 1) < 1e-12
    with pytest.raises(ValueError):
        partial_trace_env(rho, 2, 2)


def test_commutator_paths_agree(rng):
    a = random_hermitian(rng, 4)
    d = np.diag(rng.normal(size=4)).astype(complex)
    assert np.allclose(commutator(a, d), a @ d - d @ a)
    assert np.allclose(commutator(d, a), d @ a - a @ d)
    b = random_hermitian(rng, 4)
    assert np.allclose(commutator(a, b), a @ b - b @ a)


def test_cluster_values():
    groups = cluster_values(np.array([0.0, 1.0, 1e-12, 2.0, 1.0 + 5e-10]), 1e-9)
    assert [sorted(g.tolist()) for g in groups] == [[0, 2], [1, 4], [3]]
    assert cluster_values(np.array([]), 1.0) == []


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2 ** 31))
def test_eig_properties(n, seed):
    a = random_hermitian(np.random.default_rng(seed), n)
    s = eig_hermitian(a)
    assert np.all(np.diff(s.eigenvalues) >= 0)
    assert np.max(np.abs(s.reconstruct() - a)) < 1e-10
