import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from nonreciprocal import numkernel as nk


def random_complex(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a * (scale / np.linalg.norm(a, 2))


def shift(n):
    return np.diag(np.ones(n - 1), 1).astype(complex)


def cyclic(n):
    p = shift(n)
    p[n - 1, 0] = 1.0
    return p


# -- multiply ----------------------------------------------------------------

def test_multiply_identity_and_zero():
    a = random_complex(np.random.default_rng(0), 4)
    assert nk.allclose(nk.multiply(np.eye(4), a), a, 0.0)
    assert nk.allclose(nk.multiply(a, np.zeros((4, 4))), np.zeros((4, 4)), 0.0)


def test_multiply_shift_squared():
    # hand product: the single nonzero of S^2 sits at (1, 3)
    expected = np.zeros((3, 3))
    expected[0, 2] = 1.0
    assert nk.allclose(nk.multiply(shift(3), shift(3)), expected, 0.0)


def test_multiply_dimension_mismatch():
    with pytest.raises(nk.DimensionError):
        nk.multiply(np.eye(3), np.eye(4))


# -- eig -----------------------------------------------------------------------

def test_eig_identity():
    values, vectors, cond = nk.eig(np.eye(4))
    assert np.allclose(values, 1.0)
    assert cond == pytest.approx(1.0)


def test_eig_cyclic_shift_roots_of_unity():
    values, _, cond = nk.eig(cyclic(10))
    roots = np.exp(2j * np.pi * np.arange(10) / 10)
    independent = np.linalg.eigvals(cyclic(10))
    for ref in (roots, independent):
        assert max(min(abs(ref - v)) for v in values) < 1e-12
        assert max(min(abs(values - r)) for r in ref) < 1e-12
    assert cond == pytest.approx(1.0, abs=1e-10)


def test_eig_nilpotent_jordan_block():
    values, vectors, cond = nk.eig(np.array([[0, 1], [0, 0]]))
    assert np.all(values == 0)
    assert cond > 1e8
    # both columns point along e1: only one independent eigenvector
    assert abs(vectors[0, 0] * vectors[1, 1] - vectors[0, 1] * vectors[1, 0]) < 1e-12


def test_eig_rejects_non_finite():
    with pytest.raises(ValueError):
        nk.eig(np.array([[np.nan, 0], [0, 1]]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.1, 5.0))
def test_eig_residuals_random(seed, scale):
    a = random_complex(np.random.default_rng(seed), 8, scale)
    values, vectors, cond = nk.eig(a)
    if cond <= 1e6:
        resid = np.linalg.norm(a @ vectors - vectors * values, axis=0)
        assert np.max(resid) <= 1e-9
    ref = np.linalg.eigvals(a)
    assert max(min(abs(ref - v)) for v in values) < 1e-9


@pytest.mark.parametrize("n", [1, 3, 30, 120])
def test_eig_matches_lapack_at_size(n):
    a = random_complex(np.random.default_rng(n), n, 3.0)
    values, _, _ = nk.eig(a)
    ref = np.linalg.eigvals(a)
    assert max(min(abs(ref - v)) for v in values) < 1e-10


# -- expm ----------------------------------------------------------------------

def test_expm_zero_is_identity():
    assert nk.allclose(nk.expm(np.zeros((5, 5))), np.eye(5), 0.0)


@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 7.5, 100.0])
def test_expm_jordan_closed_form(t):
    h = np.array([[0, 1], [0, 0]], dtype=complex)
    expected = np.array([[1, -1j * t], [0, 1]])
    got = nk.expm(-1j * h * t)
    assert np.max(np.abs(got - expected)) <= 1e-12 * max(1.0, t)


def test_expm_diagonal():
    d = np.array([0.5, -2.0 + 1j, 3j, -40.0])
    got = nk.expm(np.diag(d))
    assert np.allclose(got, np.diag(np.exp(d)), rtol=1e-13, atol=0)


@pytest.mark.parametrize("scale", [0.01, 0.5, 3.0, 20.0, 100.0])
def test_expm_against_scipy(scale):
    rng = np.random.default_rng(int(scale * 100))
    h = random_complex(rng, 8)
    h = 0.5 * (h + h.conj().T)
    for m in (random_complex(rng, 8, scale), -1j * scale * h / np.linalg.norm(h, 2)):
        ref = scipy.linalg.expm(m)
        assert np.linalg.norm(nk.expm(m) - ref) <= 1e-12 * np.linalg.norm(ref)


def test_expm_overflow():
    with pytest.raises(nk.ExpmOverflowError):
        nk.expm(np.array([[800.0, 0.0], [0.0, 1.0]]))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t1=st.floats(0, 5), t2=st.floats(0, 5))
def test_expm_semigroup(seed, t1, t2):
    h = random_complex(np.random.default_rng(seed), 6, 1.0)
    whole = nk.expm(-1j * h * (t1 + t2))
    split = nk.expm(-1j * h * t1) @ nk.expm(-1j * h * t2)
    assert np.linalg.norm(whole - split) <= 1e-10 * np.linalg.norm(whole)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0, 50))
def test_expm_unitary_for_hermitian(seed, t):
    a = random_complex(np.random.default_rng(seed), 6, 2.0)
    h = a + a.conj().T
    u = nk.expm(-1j * h * t)
    assert np.max(np.abs(u.conj().T @ u - np.eye(6))) <= 1e-10


@pytest.mark.parametrize("n", [2, 5, 10])
@pytest.mark.parametrize("t", [0.01, 1.0, 13.0, 100.0])
def test_expm_nilpotent_shift_exact(n, t):
    got = nk.expm(-1j * shift(n) * t)
    for k in range(n):
        coeff = (-1j * t) ** k / math.factorial(k)
        diag = np.diagonal(got, k)
        assert np.all(np.abs(diag - coeff) <= 1e-12 * abs(coeff))
    assert np.all(np.tril(got, -1) == 0)


# -- solve ---------------------------------------------------------------------

def test_solve_identity():
    b = random_complex(np.random.default_rng(3), 4)
    assert nk.allclose(nk.solve(np.eye(4), b), b, 1e-15)


def test_solve_diagonal_inverse():
    got = nk.solve(np.diag([2.0, 4.0]), np.eye(2))
    assert nk.allclose(got, np.diag([0.5, 0.25]), 1e-15)


def test_solve_recovers_factor():
    rng = np.random.default_rng(11)
    s = random_complex(rng, 7) + 3 * np.eye(7)
    h = random_complex(rng, 7)
    x = nk.solve(s, s @ h)
    assert np.max(np.abs(x - h)) <= 1e-10
    assert np.linalg.norm(s @ x - s @ h) <= 1e-10 * np.linalg.norm(s @ h)


def test_solve_vector_rhs():
    a = np.array([[0.0, 2.0], [1.0, 1.0]])
    assert np.allclose(nk.solve(a, np.array([2.0, 3.0])), [2.0, 1.0])


def test_solve_singular_names_pivot():
    a = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]])
    with pytest.raises(nk.SingularMatrixError) as info:
        nk.solve(a, np.eye(3))
    assert info.value.pivot == 1
    assert "pivot 1" in str(info.value)


def test_eig_subnormal_entries_deflate():
    values, _, _ = nk.eig(np.array([[0.0, 0.0], [2.2e-309, 0.0]]))
    assert np.all(np.abs(values) < 1e-150)
