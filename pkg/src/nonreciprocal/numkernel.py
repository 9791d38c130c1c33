"""Dense complex linear algebra kernel.

Small, self-contained routines for the operators used throughout the
package: matrix products, an eigensolver (Householder reduction to
Hessenberg form followed by shifted QR sweeps), a scaling-and-squaring
matrix exponential and an LU solver with partial pivoting.

Everything operates on ``numpy`` arrays of dtype ``complex128`` and is
intended for matrices with at most a few hundred rows.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "DEFAULT_TOL",
    "DimensionError",
    "ConvergenceError",
    "SingularMatrixError",
    "ExpmOverflowError",
    "as_matrix",
    "allclose",
    "multiply",
    "eig",
    "expm",
    "solve",
    "max_norm",
]

DEFAULT_TOL = 1e-10

_EPS = np.finfo(float).eps
# back-substitution rescales once an entry passes this magnitude
_BIG = 1e100


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class ConvergenceError(ArithmeticError):
    """The QR iteration did not converge."""

    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


class SingularMatrixError(ArithmeticError):
    """LU factorisation met a pivot below the singularity threshold."""

    def __init__(self, pivot: int, value: float):
        super().__init__(f"matrix is numerically singular at pivot {pivot} (|pivot| = {value:.3e})")
        self.pivot = pivot
        self.value = value


class ExpmOverflowError(OverflowError):
    """The matrix exponential left the representable range."""


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite square complex array (copy)."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def max_norm(m) -> float:
    """Largest entry modulus."""
    a = np.asarray(m)
    return float(np.max(np.abs(a))) if a.size else 0.0


def allclose(a, b, tol: float = DEFAULT_TOL) -> bool:
    """Entrywise absolute comparison ``max |a - b| <= tol``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    return max_norm(a - b) <= tol


def multiply(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


# ---------------------------------------------------------------------------
# eigensolver
# ---------------------------------------------------------------------------

def _hessenberg(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder reduction ``a = q h q^H`` with ``h`` upper Hessenberg."""
    h = a.copy()
    n = h.shape[0]
    q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0 or np.linalg.norm(x[1:]) == 0.0:
            continue
        phase = np.exp(1j * np.angle(x[0]))
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h, q


def _givens(x: complex, y: complex) -> np.ndarray:
    """Unitary 2x2 ``g`` with ``g @ [x, y] = [r, 0]``."""
    rho = math.hypot(abs(x), abs(y))
    if rho == 0.0:
        return np.eye(2, dtype=complex)
    return np.array([[np.conj(x), np.conj(y)], [-y, x]], dtype=complex) / rho


def _wilkinson_shift(t: np.ndarray, hi: int) -> complex:
    a, b = t[hi - 1, hi - 1], t[hi - 1, hi]
    c, d = t[hi, hi - 1], t[hi, hi]
    mean = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    mu1, mu2 = mean + disc, mean - disc
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def _schur(a: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur form ``a = z t z^H`` by shifted QR on the Hessenberg form."""
    t, z = _hessenberg(a)
    n = t.shape[0]
    scale = max(max_norm(t), np.finfo(float).tiny)
    # entries below this are noise at any scale (LAPACK's smlnum)
    underflow = np.finfo(float).tiny * n / _EPS
    hi = n - 1
    sweeps = 0  # sweeps spent on the current trailing eigenvalue
    total = 0
    while hi > 0:
        lo = hi
        while lo > 0:
            sub = abs(t[lo, lo - 1])
            ref = abs(t[lo, lo]) + abs(t[lo - 1, lo - 1])
            if sub <= _EPS * ref or sub <= _EPS * scale * 1e-3 or sub <= underflow:
                t[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            sweeps = 0
            continue

        sweeps += 1
        total += 1
        if sweeps > max_sweeps:
            raise ConvergenceError("QR iteration failed to deflate", total)
        if sweeps % 11 == 0:
            # exceptional shift to break cycles
            mu = t[hi, hi] + 0.75 * abs(t[hi, hi - 1]) * (1.0 + 0.5j)
        else:
            mu = _wilkinson_shift(t, hi)

        idx = np.arange(lo, hi + 1)
        t[idx, idx] -= mu
        rotations = []
        for k in range(lo, hi):
            g = _givens(t[k, k], t[k + 1, k])
            t[k:k + 2, k:] = g @ t[k:k + 2, k:]
            t[k + 1, k] = 0.0
            rotations.append(g)
        for k, g in zip(range(lo, hi), rotations):
            gh = g.conj().T
            top = min(k + 2, hi) + 1
            t[:top, k:k + 2] = t[:top, k:k + 2] @ gh
            z[:, k:k + 2] = z[:, k:k + 2] @ gh
        t[idx, idx] += mu
    return np.triu(t), z


def _triangular_eigenvectors(t: np.ndarray) -> np.ndarray:
    """Eigenvectors of an upper-triangular matrix, one per diagonal entry."""
    n = t.shape[0]
    w = np.zeros((n, n), dtype=complex)
    smin_floor = max(_EPS * max_norm(t), np.finfo(float).tiny * 1e10)
    for k in range(n):
        lam = t[k, k]
        smin = max(_EPS * abs(lam), smin_floor)
        col = np.zeros(n, dtype=complex)
        col[k] = 1.0
        for i in range(k - 1, -1, -1):
            d = t[i, i] - lam
            if abs(d) < smin:
                d = smin
            col[i] = -(t[i, i + 1:k + 1] @ col[i + 1:k + 1]) / d
            if abs(col[i]) > _BIG:
                col[: k + 1] /= abs(col[i])
        w[:, k] = col
    return w


def eig(m, tol: float = DEFAULT_TOL, max_sweeps: int = 200):
    """Eigenvalues and right eigenvectors of a dense complex matrix.

    Parameters
    ----------
    m : array_like
        Square matrix with finite entries.
    tol : float
        Residual bound: every pair satisfies
        ``||m v - lam v|| <= tol * ||m||_2`` with ``||v|| = 1``.
    max_sweeps : int
        QR sweeps allowed per deflated eigenvalue before giving up.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
    vectors : ndarray, shape (n, n)
        Unit-norm eigenvectors stored as columns.
    condition : float
        2-norm condition number of ``vectors``; ``inf`` when numerically
        singular (defective input).

    Raises
    ------
    ConvergenceError
        The iteration stalled or a returned pair violates the residual bound.
    """
    a = as_matrix(m)
    n = a.shape[0]
    # subnormals break the Householder and Givens scalings
    a[np.abs(a) < np.finfo(float).tiny] = 0.0
    t, z = _schur(a, max_sweeps)
    vectors = z @ _triangular_eigenvectors(t)
    vectors /= np.linalg.norm(vectors, axis=0)
    values = np.diag(t).copy()

    anorm = np.linalg.norm(a, 2)
    resid = np.linalg.norm(a @ vectors - vectors * values, axis=0)
    worst = float(np.max(resid)) if n else 0.0
    if worst > tol * max(anorm, np.finfo(float).tiny):
        raise ConvergenceError(f"eigenpair residual {worst:.3e} exceeds tolerance", 0)

    sv = np.linalg.svd(vectors, compute_uv=False)
    if sv[-1] <= _EPS * sv[0]:
        condition = math.inf
    else:
        condition = float(sv[0] / sv[-1])
    return values, vectors, condition


# ---------------------------------------------------------------------------
# matrix exponential
# ---------------------------------------------------------------------------

_EXPM_SCALED_NORM = 0.5
_EXPM_MAX_TERMS = 30


def expm(m) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a Taylor core.

    The argument is scaled by ``2**-s`` so that its 1-norm is at most 0.5,
    the Taylor series is summed until every entry of the next term drops
    below rounding relative to the same entry of the partial sum, and
    the result is squared ``s`` times.  No eigendecomposition is involved,
    so defective matrices are handled like any other.

    Raises
    ------
    ExpmOverflowError
        If any entry of the result (or an intermediate square) is not
        finite.
    """
    a = as_matrix(m)
    n = a.shape[0]
    norm1 = float(np.max(np.sum(np.abs(a), axis=0)))
    s = 0
    if norm1 > _EXPM_SCALED_NORM:
        s = int(math.ceil(math.log2(norm1 / _EXPM_SCALED_NORM)))
    a_scaled = a / (2.0 ** s)

    result = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, _EXPM_MAX_TERMS + 1):
        term = term @ a_scaled / k
        result += term
        # entrywise test keeps graded entries (e.g. t**k / k! of a shift) exact
        if np.all(np.abs(term) <= 0.5 * _EPS * np.abs(result)):
            break

    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            result = result @ result
            if not np.all(np.isfinite(result)):
                raise ExpmOverflowError("matrix exponential overflowed during squaring")
    return result


# ---------------------------------------------------------------------------
# linear solves
# ---------------------------------------------------------------------------

def solve(a, b) -> np.ndarray:
    """Solve ``a x = b`` by LU with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides.  Raises
    :class:`SingularMatrixError` naming the first pivot whose modulus falls
    below ``n * eps * max|a|``.
    """
    lu = as_matrix(a)
    rhs = np.array(b, dtype=complex)
    n = lu.shape[0]
    if rhs.shape[0] != n:
        raise DimensionError(f"right-hand side has {rhs.shape[0]} rows, matrix has {n}")
    vector = rhs.ndim == 1
    if vector:
        rhs = rhs[:, None]

    threshold = n * _EPS * max_norm(lu)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= threshold:
            raise SingularMatrixError(k, float(abs(lu[p, k])))
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            rhs[[k, p]] = rhs[[p, k]]
        factors = lu[k + 1:, k] / lu[k, k]
        lu[k + 1:, k] = factors
        lu[k + 1:, k + 1:] -= np.outer(factors, lu[k, k + 1:])
        rhs[k + 1:] -= np.outer(factors, rhs[k])

    x = rhs
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - lu[k, k + 1:] @ x[k + 1:]) / lu[k, k]
    return x[:, 0] if vector else x
