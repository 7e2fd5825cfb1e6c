import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cstarext.errors import NotNormal, NotPositive
from cstarext.linalg import (
    Tolerance,
    eig_normal,
    is_partial_isometry,
    kernel_basis,
    match_multisets,
    normalize_phases,
    numeric_rank,
    polar,
    projection_basis,
    psd_sqrt,
    svd,
)
from cstarext.testkit import haar_unitary


def gaussian(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def test_svd_identity():
    res = svd(np.eye(2))
    np.testing.assert_allclose(res.sigma, [1, 1])
    np.testing.assert_allclose(res.reconstruct(), np.eye(2), atol=1e-14)


def test_svd_diagonal():
    np.testing.assert_allclose(svd(np.diag([3.0, 0.0])).sigma, [3, 0])


def test_svd_matches_gram_eigenvalues():
    rng = np.random.default_rng(1)
    a = gaussian(rng, 4, 3)
    ref = np.sqrt(np.sort(np.linalg.eigvalsh(a.conj().T @ a))[::-1])
    np.testing.assert_allclose(svd(a).sigma, ref, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_svd_reconstruction_and_order(seed):
    rng = np.random.default_rng(seed)
    a = gaussian(rng, 5, 4)
    res = svd(a)
    assert np.all(np.diff(res.sigma) <= 0)
    assert np.linalg.norm(a - res.reconstruct(), 2) <= 1e-9 * (1 + np.linalg.norm(a, 2))


def test_tolerance_rejects_nonpositive():
    with pytest.raises(ValueError):
        Tolerance(rank_tol=0.0)
    with pytest.raises(ValueError):
        Tolerance(unitary_tol=-1.0)


def test_polar_examples():
    v, p = polar(2 * np.eye(2))
    np.testing.assert_allclose(v, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(p, 2 * np.eye(2), atol=1e-14)
    v, p = polar(np.zeros((2, 2)))
    np.testing.assert_allclose(v, 0)
    np.testing.assert_allclose(p, 0)
    v, p = polar(np.diag([1.0, -1.0]))
    np.testing.assert_allclose(v, np.diag([1, -1]), atol=1e-14)
    np.testing.assert_allclose(p, np.eye(2), atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_polar_properties_rank_deficient(seed):
    rng = np.random.default_rng(seed)
    a = gaussian(rng, 5, 2) @ gaussian(rng, 2, 5)
    v, p = polar(a)
    np.testing.assert_allclose(v @ p, a, atol=1e-9)
    assert is_partial_isometry(v)
    np.testing.assert_allclose(v.conj().T @ a, p, atol=1e-9)
    assert numeric_rank(v) == 2


def test_psd_sqrt_examples():
    np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2, 3]), atol=1e-14)
    np.testing.assert_allclose(psd_sqrt(np.zeros((3, 3))), 0)


def test_psd_sqrt_haar_conjugate():
    rng = np.random.default_rng(3)
    q = haar_unitary(4, rng)
    a = q @ np.diag(rng.uniform(0, 1, 4)) @ q.conj().T
    b = psd_sqrt(a)
    np.testing.assert_allclose(b @ b, a, atol=1e-10)
    assert np.linalg.eigvalsh(b).min() >= -1e-12


def test_psd_sqrt_clamps_and_rejects():
    np.testing.assert_allclose(psd_sqrt(np.diag([1.0, -5e-9])), np.diag([1, 0]), atol=1e-14)
    with pytest.raises(NotPositive):
        psd_sqrt(np.diag([1.0, -1e-6]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_psd_sqrt_idempotence(seed, n):
    rng = np.random.default_rng(seed)
    q = haar_unitary(n, rng)
    b = q @ np.diag(rng.uniform(0, 1, n)) @ q.conj().T
    np.testing.assert_allclose(psd_sqrt(b @ b), b, atol=1e-8)


def test_numeric_rank_examples():
    assert numeric_rank(np.eye(3)) == 3
    assert numeric_rank(np.outer([1, 2, 3], [1, 0, 1])) == 1
    assert numeric_rank(np.diag([1.0, 1e-12, 0.0]), Tolerance(rank_tol=1e-9)) == 1
    assert numeric_rank(np.zeros((3, 3))) == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(0, 6))
def test_rank_nullity(seed, n, r):
    rng = np.random.default_rng(seed)
    r = min(r, n)
    a = gaussian(rng, n, r) @ gaussian(rng, r, n) if r else np.zeros((n, n))
    assert numeric_rank(a) + kernel_basis(a).shape[1] == n


def test_eig_normal_examples():
    np.testing.assert_allclose(sorted(eig_normal(np.diag([1j, -1j])), key=np.angle), [-1j, 1j])
    np.testing.assert_allclose(eig_normal(np.eye(2)), [1, 1])


def test_eig_normal_haar_conjugate():
    rng = np.random.default_rng(4)
    theta = rng.uniform(-np.pi, np.pi, 4)
    q = haar_unitary(4, rng)
    u = q @ np.diag(np.exp(1j * theta)) @ q.conj().T
    vals = eig_normal(u)
    assert match_multisets(vals, np.exp(1j * theta), 1e-8)
    np.testing.assert_allclose(np.abs(vals), 1, atol=1e-8)


def test_eig_normal_rejects_non_normal():
    with pytest.raises(NotNormal):
        eig_normal(np.array([[0, 1], [0, 0]]))


def test_match_multisets():
    assert match_multisets([1, 1, -1], [-1, 1, 1], 1e-9)
    assert not match_multisets([1, -1], [1, 1], 1e-9)
    assert not match_multisets([1], [1, 1], 1e-9)


def test_normalize_phases_makes_peak_positive():
    rng = np.random.default_rng(5)
    q = normalize_phases(gaussian(rng, 4, 3))
    for j in range(3):
        k = np.argmax(np.abs(q[:, j]))
        assert abs(q[k, j].imag) < 1e-14 and q[k, j].real > 0


def test_projection_basis_spans_range():
    rng = np.random.default_rng(6)
    q = haar_unitary(4, rng)[:, :2]
    p = q @ q.conj().T
    b = projection_basis(p)
    np.testing.assert_allclose(b @ b.conj().T, p, atol=1e-12)
