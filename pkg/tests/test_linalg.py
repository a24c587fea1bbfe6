import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from goalsens import linalg
from goalsens.errors import ConfigError, DegenerateVector, DimensionMismatch, SingularSystem
from goalsens.linalg import RegularizationPolicy


def mp_normal_solve(M, rhs, eps_s, dps=50):
    """Reference: Gaussian elimination on (M^T M + eps_s I) x = rhs in 50-digit arithmetic."""
    with mpmath.workdps(dps):
        A = mpmath.matrix(M.tolist())
        G = A.T * A
        for i in range(G.rows):
            G[i, i] += mpmath.mpf(eps_s)
        x = mpmath.lu_solve(G, mpmath.matrix(rhs.tolist()))
        return np.array([float(v) for v in x])


def test_policy_defaults_and_off():
    p = RegularizationPolicy()
    assert p.alpha_s == 1e-14 and p.effective_alpha == 1e-14
    off = RegularizationPolicy.off()
    assert off.effective_alpha == 0.0
    with pytest.raises(ConfigError):
        RegularizationPolicy(alpha_s=-1.0)


def test_shift_scales_with_trace():
    gram = np.diag([2.0, 4.0])
    assert linalg.regularization_shift(gram, RegularizationPolicy(alpha_s=0.5)) == pytest.approx(0.5 / 2 * 6)
    assert linalg.regularization_shift(gram, None) == 0.0


@pytest.mark.parametrize("N,E", [(8, 3), (30, 10), (101, 20)])
@pytest.mark.parametrize("alpha", [0.0, 1e-14, 1e-3])
def test_regularized_solve_matches_high_precision(N, E, alpha, rng):
    M = rng.standard_normal((N, E))
    rhs = rng.standard_normal(E)
    policy = RegularizationPolicy(alpha_s=alpha)
    x = linalg.regularized_normal_solve(M, rhs, policy)
    eps_s = alpha / E * np.trace(M.T @ M)
    ref = mp_normal_solve(M, rhs, eps_s)
    assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 1e-10


def test_solve_identity_and_diagonal():
    rhs = np.array([1.0, -2.0, 3.0])
    assert np.allclose(linalg.regularized_normal_solve(np.eye(3), rhs), rhs)
    M = np.diag([1.0, 2.0, 4.0])
    assert np.allclose(linalg.regularized_normal_solve(M, rhs), rhs / np.array([1, 4, 16]))


def test_dependent_columns_raise_singular():
    v = np.arange(1.0, 6.0)
    M = np.column_stack([v, 2 * v])
    with pytest.raises(SingularSystem):
        linalg.regularized_normal_solve(M, np.ones(2))


def test_regularisation_rescues_dependent_columns():
    v = np.arange(1.0, 6.0)
    M = np.column_stack([v, 2 * v])
    x = linalg.regularized_normal_solve(M, np.ones(2), RegularizationPolicy(alpha_s=1e-8))
    assert np.all(np.isfinite(x))


def test_zero_matrix_is_singular():
    with pytest.raises(SingularSystem):
        linalg.solve_spd(np.zeros((2, 2)), np.ones(2))


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        linalg.regularized_normal_solve(np.ones((4, 2)), np.ones(3))
    with pytest.raises(DimensionMismatch):
        linalg.matvec(np.ones((3, 2)), np.ones(3))
    with pytest.raises(DimensionMismatch):
        linalg.matTvec(np.ones((3, 2)), np.ones(2))
    with pytest.raises(DimensionMismatch):
        linalg.matmul(np.ones((3, 2)), np.ones((3, 2)))
    with pytest.raises(DimensionMismatch):
        linalg.gram_schmidt_against(np.ones(3), [np.ones(4)])


def test_products():
    A = np.arange(6.0).reshape(3, 2)
    assert np.array_equal(linalg.matvec(A, [1.0, 1.0]), A @ [1.0, 1.0])
    assert np.array_equal(linalg.matTvec(A, [1.0, 0.0, 1.0]), A.T @ [1.0, 0.0, 1.0])


def test_gram_schmidt_examples():
    e1, e2 = np.eye(2)
    assert np.allclose(linalg.gram_schmidt_against([1.0, 1.0], [e1]), e2)
    v = np.array([3.0, -4.0])
    assert np.array_equal(linalg.gram_schmidt_against(v, []), v)
    with pytest.raises(DegenerateVector):
        linalg.gram_schmidt_against([2.0, 0.0], [e1])
    with pytest.raises(DegenerateVector):
        linalg.gram_schmidt_against(np.zeros(3), [])
    with pytest.raises(DegenerateVector):
        linalg.gram_schmidt_against([1.0, 0.0], [np.zeros(2)])


def test_gram_schmidt_nearly_dependent_input_is_orthogonalised():
    # a residual many orders of magnitude below |v| must still come out orthogonal
    rng = np.random.default_rng(7)
    B = np.linalg.qr(rng.standard_normal((50, 10)))[0].T
    v = B.T @ rng.standard_normal(10) + 1e-9 * rng.standard_normal(50)
    r = linalg.gram_schmidt_against(v, B)
    cos = np.abs(B @ r) / np.linalg.norm(r)
    assert cos.max() < linalg.GS_ORTHOGONALITY_TOL


@settings(max_examples=60, deadline=None)
@given(n=st.integers(3, 40), k=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_gram_schmidt_property(n, k, seed):
    k = min(k, n - 1)
    rng = np.random.default_rng(seed)
    basis = []
    for _ in range(k):
        basis.append(linalg.gram_schmidt_against(rng.standard_normal(n), basis))
    r = linalg.gram_schmidt_against(rng.standard_normal(n), basis)
    B = np.array(basis)
    cos = np.abs(B @ r) / (np.linalg.norm(B, axis=1) * np.linalg.norm(r))
    assert cos.max() < 1e-10


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 30), e=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
def test_orthonormalize_columns_property(n, e, seed):
    e = min(e, n)
    D = np.random.default_rng(seed).standard_normal((n, e))
    Q = linalg.orthonormalize_columns(D)
    assert Q.shape == (n, e)
    assert np.abs(Q.T @ Q - np.eye(e)).max() < 1e-10
