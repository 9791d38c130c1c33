import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonreciprocal.model import HamiltonianSpec, build, gauge_transform, is_normal
from nonreciprocal.spectral import analyze, max_growth_rate, spectrum_is_real

SIN72 = np.sin(np.deg2rad(72))


def chain(**kw):
    return HamiltonianSpec("chain", **kw)


def multiset_distance(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return max(max(min(abs(b - x)) for x in a), max(min(abs(a - y)) for y in b))


specs = st.builds(
    lambda n, t_l, t_r, gamma, beta: chain(n=n, t_l=t_l, t_r=t_r, gamma=gamma, beta=beta),
    n=st.integers(2, 10),
    t_l=st.floats(0.1, 2),
    t_r=st.floats(0.1, 2),
    gamma=st.floats(0, 1),
    beta=st.sampled_from([0.0, 1.0]),
) | st.builds(
    lambda g0, g, c: HamiltonianSpec("pt2", gamma0=g0, g=g, c=c),
    g0=st.floats(0, 1), g=st.floats(0, 2), c=st.floats(0.1, 2),
)


def test_pbc_unidirectional():
    sd = analyze(build(chain(t_r=0, beta=1)))
    assert not sd.defective
    assert np.allclose(np.abs(sd.eigenvalues), 1.0, atol=1e-12)
    roots = np.exp(2j * np.pi * np.arange(10) / 10)
    assert multiset_distance(sd.eigenvalues, roots) < 1e-12
    gram = sd.right_vectors.conj().T @ sd.right_vectors
    assert np.allclose(gram, np.eye(10), atol=1e-10)
    assert sd.biorthogonality_error() < 1e-8


def test_obc_unidirectional_is_defective():
    sd = analyze(build(chain(t_r=0, beta=0)))
    assert np.all(sd.eigenvalues == 0)
    assert sd.defective
    # rank(H) = 9: one independent eigenvector on each side
    assert np.linalg.matrix_rank(build(chain(t_r=0, beta=0))) == 9
    assert sd.right_vectors.shape == (10, 1) and sd.left_vectors.shape == (10, 1)
    assert abs(sd.right_vectors[0, 0]) == pytest.approx(1.0)
    assert abs(sd.left_vectors[9, 0]) == pytest.approx(1.0)


def test_obc_partial_cosine_spectrum():
    sd = analyze(build(chain(t_r=0.5, beta=0)))
    k = np.arange(1, 11)
    expected = 2 * np.sqrt(0.5) * np.cos(k * np.pi / 11)
    assert not sd.defective
    assert multiset_distance(sd.eigenvalues, expected) < 1e-12
    assert np.allclose(sd.eigenvalues.real, np.sort(expected), atol=1e-12)
    assert sd.biorthogonality_error() < 1e-8


def test_sorting_descending_imag_then_real():
    sd = analyze(build(chain(t_r=0, beta=1)))
    im = sd.eigenvalues.imag
    assert np.all(np.diff(im) <= 1e-9)
    assert sd.eigenvalues[0].real < sd.eigenvalues[1].real
    assert sd.eigenvalues[0].imag == pytest.approx(SIN72)


def test_max_growth_rate_values():
    assert max_growth_rate(analyze(build(chain(t_l=1, t_r=1, beta=1)))) == pytest.approx(0, abs=1e-12)
    assert max_growth_rate(analyze(build(chain(t_r=0, beta=1)))) == pytest.approx(0.9510565, abs=1e-7)
    assert max_growth_rate(analyze(build(chain(t_r=0, beta=1, gamma=0.5)))) == pytest.approx(0.4510565, abs=1e-7)


def test_spectrum_is_real_values():
    assert spectrum_is_real(analyze(build(chain(t_r=0, beta=0))))
    sd = analyze(build(chain(t_r=0, beta=0, gamma=0.5)))
    assert not spectrum_is_real(sd)
    assert np.allclose(sd.eigenvalues.imag, -0.5)
    assert not spectrum_is_real(analyze(build(chain(t_r=0, beta=1))))


def test_exceptional_point_dimer():
    sd = analyze(build(HamiltonianSpec("pt2", gamma0=0.2)))
    assert sd.defective
    assert np.allclose(sd.eigenvalues, -0.2j, atol=1e-7)
    right = sd.right_vectors[:, 0] / sd.right_vectors[1, 0]
    left = sd.left_vectors[:, 0] / sd.left_vectors[1, 0]
    assert np.allclose(right, [1j, 1], atol=1e-7)
    assert np.allclose(left, [-1j, 1], atol=1e-7)


def test_degenerate_hermitian_block_biorthonormal():
    sd = analyze(build(chain(t_l=1, t_r=1, beta=1)))
    assert not sd.defective
    assert sd.biorthogonality_error() < 1e-8
    assert np.allclose(sd.right_vectors.conj().T @ sd.right_vectors, np.eye(10), atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(spec=specs)
def test_conjugation_pairing(spec):
    h = build(spec)
    a = analyze(h).eigenvalues
    b = analyze(h.conj().T).eigenvalues
    assert multiset_distance(a, b.conj()) <= 1e-9 or analyze(h).defective


@settings(max_examples=40, deadline=None)
@given(spec=specs)
def test_biorthonormal_when_diagonalizable(spec):
    sd = analyze(build(spec))
    if not sd.defective:
        assert sd.biorthogonality_error() <= 1e-8
        assert np.allclose(np.linalg.norm(sd.right_vectors, axis=0), 1.0)


@settings(max_examples=30, deadline=None)
@given(spec=specs, shift=st.floats(0, 2))
def test_diagonal_shift_covariance(spec, shift):
    h = build(spec)
    base = analyze(h)
    shifted = analyze(h - 1j * shift * np.eye(h.shape[0]))
    if not base.defective:
        assert np.allclose(shifted.eigenvalues, base.eigenvalues - 1j * shift, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(t_l=st.floats(0.1, 2), t_r=st.floats(0.1, 2), gamma=st.floats(0, 1), beta=st.floats(0, 1),
       n=st.integers(2, 10))
def test_normal_implies_orthogonal(t_l, t_r, gamma, beta, n):
    h = build(chain(n=n, t_l=t_l, t_r=t_r, gamma=gamma, beta=beta))
    if is_normal(h):
        sd = analyze(h)
        gram = sd.right_vectors.conj().T @ sd.right_vectors
        assert np.allclose(gram, np.eye(n), atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(t_l=st.floats(0.1, 2), t_r=st.floats(0.1, 2), gamma=st.floats(0, 1), n=st.integers(2, 10))
def test_gauge_invariance(t_l, t_r, gamma, n):
    spec = chain(n=n, t_l=t_l, t_r=t_r, gamma=gamma, beta=0)
    _, h_sym = gauge_transform(spec)
    assert multiset_distance(analyze(build(spec)).eigenvalues, analyze(h_sym).eigenvalues) <= 1e-9
