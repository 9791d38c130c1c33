"""Biorthogonal eigen-analysis.

Right eigenvectors come from ``h`` and left eigenvectors from ``h^dagger``,
each through :func:`nonreciprocal.numkernel.eig`.  The two sets are paired
by eigenvalue conjugation and scaled so that ``<phi_k|psi_k> = 1`` with
``||psi_k|| = 1``.  Matrices whose eigenvector basis is numerically
singular are flagged defective; for those only the independent
eigenvectors (null spaces of ``h - lam``) are returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numkernel

__all__ = [
    "DEFECTIVE_CONDITION",
    "REAL_TOL",
    "SpectralData",
    "analyze",
    "max_growth_rate",
    "spectrum_is_real",
]

DEFECTIVE_CONDITION = 1e8
REAL_TOL = 1e-9
_SORT_GRID = 1e-9


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues with paired right/left eigenvectors (stored as columns).

    ``eigenvalues`` are sorted by descending imaginary part, ties by
    ascending real part, so index 0 is the dominant growth mode.  When
    ``defective`` is false, ``left_vectors[:, m].conj() @ right_vectors[:, n]``
    is the identity; when true the vector arrays may have fewer columns
    than there are eigenvalues and no pairing is implied.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    defective: bool
    eigvec_condition: float
    # max distance between eig(h) and conj(eig(h^dagger)) after matching
    pairing_error: float

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def biorthogonality_error(self) -> float:
        if self.defective:
            return math.nan
        gram = self.left_vectors.conj().T @ self.right_vectors
        return float(np.max(np.abs(gram - np.eye(self.n))))


def _sort_order(values: np.ndarray) -> np.ndarray:
    im_key = -np.round(values.imag / _SORT_GRID)
    return np.lexsort((values.real, im_key))


def _clusters(values: np.ndarray, radius: float) -> list[list[int]]:
    """Single-linkage groups of eigenvalues closer than ``radius``."""
    parent = list(range(len(values)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[i] - values[j]) <= radius:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(len(values)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _greedy_pairing(right_vals, right_vecs, left_vals, left_vecs) -> np.ndarray:
    """For each right index, the matched left index.

    Candidates are taken in order of increasing ``|lam - conj(mu)|``;
    near-ties prefer the larger overlap ``|<phi|psi>|``.
    """
    n = len(right_vals)
    dist = np.abs(right_vals[:, None] - left_vals.conj()[None, :])
    overlap = np.abs(left_vecs.conj().T @ right_vecs).T  # [right, left]
    scale = max(1.0, float(np.max(np.abs(right_vals))))
    dist_key = np.round(dist / (1e-8 * scale))
    order = np.lexsort((-overlap.ravel(), dist_key.ravel()))
    match = -np.ones(n, dtype=int)
    used = np.zeros(n, dtype=bool)
    for flat in order:
        i, j = divmod(int(flat), n)
        if match[i] < 0 and not used[j]:
            match[i] = j
            used[j] = True
    return match


def _null_space(m: np.ndarray, rtol: float) -> np.ndarray:
    _, sv, vh = np.linalg.svd(m)
    cutoff = rtol * max(sv[0], 1.0) if sv.size else 0.0
    rank = int(np.sum(sv > cutoff))
    return vh[rank:].conj().T


def _defective_vectors(h, values, cluster_radius):
    hd = h.conj().T
    n = h.shape[0]
    rights, lefts = [], []
    for group in _clusters(values, cluster_radius):
        mu = complex(np.mean(values[group]))
        rtol = max(1e-7, cluster_radius)
        right = _null_space(h - mu * np.eye(n), rtol)
        left = _null_space(hd - np.conj(mu) * np.eye(n), rtol)
        rights.append((mu, right))
        lefts.append((mu, left))
    order = _sort_order(np.array([mu for mu, _ in rights]))
    right = np.hstack([rights[k][1] for k in order])
    left = np.hstack([lefts[k][1] for k in order])
    return right, left


def analyze(h, tol: float = numkernel.DEFAULT_TOL) -> SpectralData:
    """Full right/left eigen-analysis of ``h``.

    ``tol`` is the residual tolerance handed to the eigensolver.
    """
    h = numkernel.as_matrix(h)
    values, right, condition = numkernel.eig(h, tol)
    left_values, left, _ = numkernel.eig(h.conj().T, tol)

    order = _sort_order(values)
    values, right = values[order], right[:, order]

    match = _greedy_pairing(values, right, left_values, left)
    left_values, left = left_values[match], left[:, match]
    pairing_error = float(np.max(np.abs(values - left_values.conj())))

    hnorm = max(np.linalg.norm(h, 2), 1.0)
    defective = not condition <= DEFECTIVE_CONDITION
    if defective:
        right, left = _defective_vectors(h, values, 1e-6 * hnorm)
        return SpectralData(values, right, left, True, condition, pairing_error)

    right = right.copy()
    left = left.copy()
    for group in _clusters(values, 1e-8 * hnorm):
        if len(group) > 1:
            q, _ = np.linalg.qr(right[:, group])
            right[:, group] = q
        else:
            right[:, group] /= np.linalg.norm(right[:, group])
        gram = left[:, group].conj().T @ right[:, group]
        # new left^H = gram^-1 left^H, so that left^H right = 1 on the block
        left[:, group] = numkernel.solve(gram, left[:, group].conj().T).conj().T
    return SpectralData(values, right, left, False, condition, pairing_error)


def max_growth_rate(sd: SpectralData) -> float:
    """Largest imaginary part of the spectrum (asymptotic norm growth rate)."""
    return float(np.max(sd.eigenvalues.imag))


def spectrum_is_real(sd: SpectralData, tol: float = REAL_TOL) -> bool:
    return bool(np.all(np.abs(sd.eigenvalues.imag) <= tol))
