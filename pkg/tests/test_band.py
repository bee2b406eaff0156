import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entcert.band import CoherenceBandMatrix, NoiseDiagonal, psd_check, submatrix
from entcert.errors import DomainError, StructuralError


def _uniform(d, v=0.9):
    return CoherenceBandMatrix(np.full(d, 1.0 / d), np.full(d - 1, v / d), normalized=True)


def test_psd_check_basic():
    assert psd_check(np.eye(3))
    assert psd_check(np.ones((4, 4)))
    assert not psd_check(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_psd_check_rejects_bad_shapes():
    with pytest.raises(StructuralError):
        psd_check(np.ones((2, 3)))
    with pytest.raises(StructuralError):
        psd_check(np.array([[1.0, 0.5], [0.1, 1.0]]))


def test_psd_check_boundary_tolerance():
    # rank-1 matrix with roundoff-level negative eigenvalue
    v = np.array([1.0, 0.3, -0.7])
    m = np.outer(v, v) - 1e-13 * np.eye(3)
    assert psd_check(m)
    assert not psd_check(np.outer(v, v) - 1e-3 * np.eye(3))


@given(st.integers(2, 7), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_psd_check_permutation_invariant(d, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(d, d))
    m = g @ g.T - rng.uniform(0, 2) * np.eye(d)
    perm = rng.permutation(d)
    assert psd_check(m) == psd_check(m[np.ix_(perm, perm)])


def test_band_matrix_validation():
    with pytest.raises(StructuralError):
        CoherenceBandMatrix([0.5, 0.5], [0.1, 0.1])
    with pytest.raises(DomainError):
        CoherenceBandMatrix([0.5, -0.1], [0.1])
    with pytest.raises(DomainError):
        CoherenceBandMatrix([0.5, 0.5], [0.6])


def test_band_matrix_is_read_only():
    m = _uniform(4)
    with pytest.raises(ValueError):
        m.diag[0] = 1.0


def test_full_window_is_identity():
    m = _uniform(5)
    assert submatrix(m, 1, 5) == m


def test_window_rescales_to_unit_sum():
    rng = np.random.default_rng(0)
    p = rng.uniform(0.5, 1.5, 10)
    p /= p.sum()
    m = CoherenceBandMatrix(p, 0.4 * (p[:-1] + p[1:]), normalized=True)
    sub = submatrix(m, 2, 9)
    assert sub.dim == 8
    np.testing.assert_allclose(sub.diag, p[1:9] / p[1:9].sum(), rtol=1e-14)
    assert sub.diag.sum() == pytest.approx(1.0)


def test_window_hand_renormalisation():
    m = CoherenceBandMatrix([0.5, 0.3, 0.2], [0.1, 0.1], normalized=True)
    np.testing.assert_allclose(submatrix(m, 1, 2).diag, [0.625, 0.375])


def test_unnormalized_window_keeps_units():
    m = CoherenceBandMatrix([0.5, 0.3, 0.2], [0.1, 0.1], normalized=False)
    np.testing.assert_allclose(submatrix(m, 1, 2).diag, [0.5, 0.3])


@pytest.mark.parametrize("a,b", [(2, 2), (3, 2), (0, 2), (1, 6)])
def test_bad_window(a, b):
    with pytest.raises(DomainError):
        submatrix(_uniform(5), a, b)


def test_normalize_idempotent():
    m = CoherenceBandMatrix([3.0, 2.0, 5.0], [1.0, 2.0])
    once = m.normalize()
    assert once.normalize() == once
    assert once.diag.sum() == pytest.approx(1.0)


@given(st.integers(3, 9), st.data())
@settings(max_examples=80, deadline=None)
def test_window_composition(d, data):
    rng = np.random.default_rng(d)
    p = rng.uniform(0.2, 1.0, d)
    m = CoherenceBandMatrix(p / p.sum(), 0.3 * (p[:-1] + p[1:]) / p.sum(), normalized=True)
    a = data.draw(st.integers(1, d - 1))
    b = data.draw(st.integers(a + 1, d))
    size = b - a + 1
    a2 = data.draw(st.integers(1, size - 1))
    b2 = data.draw(st.integers(a2 + 1, size))
    lhs = submatrix(submatrix(m, a, b), a2, b2)
    rhs = submatrix(m, a + a2 - 1, a + b2 - 1)
    np.testing.assert_allclose(lhs.diag, rhs.diag, rtol=1e-12)
    np.testing.assert_allclose(lhs.band1, rhs.band1, rtol=1e-12)


def test_dense_fills_symmetric():
    m = _uniform(4, 0.8)
    x = m.dense(unknown=0.0)
    np.testing.assert_array_equal(x, x.T)
    assert x[0, 1] == pytest.approx(0.2)
    assert x[0, 2] == 0.0


def test_noise_diagonal():
    assert NoiseDiagonal(0.01).population([0.2, 0.3]) == pytest.approx(0.0025)
    with pytest.raises(DomainError):
        NoiseDiagonal(-0.1)
