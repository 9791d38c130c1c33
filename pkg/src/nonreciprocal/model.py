"""Hamiltonian families and structural predicates.

Families
--------
``chain``
    N-site tight-binding ring/chain with leftward hopping ``t_l`` on the
    superdiagonal, rightward hopping ``t_r`` on the subdiagonal, uniform
    loss ``-i gamma`` on the diagonal and corner couplings scaled by the
    boundary parameter ``beta`` (1 = periodic, 0 = open).
``jordan2``
    ``[[0, t_l], [0, 0]]``, the two-site unidirectional block.
``jordan2-loss``
    ``[[-i gamma, t_l], [0, -i gamma]]``.
``pt2``
    Passive PT-symmetric dimer
    ``[[i g - i gamma0, c], [c, -i g - i gamma0]]``; at ``g = c`` it sits on
    an exceptional point with the doubly degenerate eigenvalue
    ``-i gamma0``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import numkernel

__all__ = [
    "FAMILIES",
    "CLASSIFY_TOL",
    "HamiltonianSpec",
    "build",
    "is_hermitian",
    "is_normal",
    "check_pseudo_hermitian",
    "gauge_transform",
    "gauge_metric",
]

FAMILIES = ("chain", "jordan2", "jordan2-loss", "pt2")
CLASSIFY_TOL = 1e-9


@dataclass(frozen=True)
class HamiltonianSpec:
    """Declarative model description.

    Only the fields relevant to ``family`` are used; the others keep their
    defaults.  ``pt2`` reads ``gamma0``, ``g`` and ``c``.
    """

    family: str = "chain"
    n: int = 10
    t_l: float = 1.0
    t_r: float = 0.0
    gamma: float = 0.0
    beta: float = 1.0
    gamma0: float = 0.0
    g: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.family == "chain" and int(self.n) < 2:
            raise ValueError(f"chain requires n >= 2, got n={self.n}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.gamma0 < 0:
            raise ValueError(f"gamma0 must be >= 0, got {self.gamma0}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        for name in ("t_l", "t_r", "gamma", "beta", "gamma0", "g", "c"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def dim(self) -> int:
        return int(self.n) if self.family == "chain" else 2

    def replace(self, **changes) -> "HamiltonianSpec":
        data = asdict(self)
        data.update(changes)
        return HamiltonianSpec(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def build(spec: HamiltonianSpec) -> np.ndarray:
    """Dense matrix realising ``spec``."""
    if spec.family == "chain":
        n = int(spec.n)
        h = np.zeros((n, n), dtype=complex)
        h[np.diag_indices(n)] = -1j * spec.gamma
        idx = np.arange(n - 1)
        h[idx, idx + 1] = spec.t_l
        h[idx + 1, idx] = spec.t_r
        # n == 2: corners coincide with the off-diagonals and add to them
        h[0, n - 1] += spec.beta * spec.t_r
        h[n - 1, 0] += spec.beta * spec.t_l
        return h
    if spec.family == "jordan2":
        return np.array([[0.0, spec.t_l], [0.0, 0.0]], dtype=complex)
    if spec.family == "jordan2-loss":
        return np.array([[-1j * spec.gamma, spec.t_l], [0.0, -1j * spec.gamma]], dtype=complex)
    # pt2
    return np.array(
        [
            [1j * spec.g - 1j * spec.gamma0, spec.c],
            [spec.c, -1j * spec.g - 1j * spec.gamma0],
        ],
        dtype=complex,
    )


def is_hermitian(h, tol: float = CLASSIFY_TOL) -> bool:
    h = numkernel.as_matrix(h)
    return numkernel.max_norm(h - h.conj().T) <= tol


def is_normal(h, tol: float = CLASSIFY_TOL) -> bool:
    h = numkernel.as_matrix(h)
    hd = h.conj().T
    return numkernel.max_norm(h @ hd - hd @ h) <= tol


def check_pseudo_hermitian(h, eta, tol: float = CLASSIFY_TOL) -> bool:
    """True iff ``eta h eta^-1`` equals ``h^dagger`` within ``tol``.

    Raises :class:`~nonreciprocal.numkernel.SingularMatrixError` for a
    singular ``eta``.  A true result does not imply a real spectrum.
    """
    h = numkernel.as_matrix(h)
    eta = numkernel.as_matrix(eta)
    if eta.shape != h.shape:
        raise numkernel.DimensionError(f"eta shape {eta.shape} does not match h {h.shape}")
    left = eta @ h
    # (left @ eta^-1)^T = eta^-T @ left^T
    conjugated = numkernel.solve(eta.T, left.T).T
    return numkernel.max_norm(conjugated - h.conj().T) <= tol


def gauge_transform(spec: HamiltonianSpec) -> tuple[np.ndarray, np.ndarray]:
    """Imaginary-gauge similarity that symmetrises an open chain.

    Returns ``(s, h_sym)`` with ``s = diag(r, r**2, ..., r**N)``,
    ``r = sqrt(t_l / t_r)`` and ``h_sym = s @ H @ inv(s)``.  Both hopping
    diagonals of ``h_sym`` equal ``sqrt(t_l * t_r)``; the diagonal is left
    untouched.
    """
    if spec.family != "chain":
        raise ValueError("gauge transform is defined for the chain family only")
    if spec.beta != 0:
        raise ValueError("PBC not gauge-removable")
    if spec.t_l == 0 or spec.t_r == 0:
        raise ValueError("gauge transform singular for unidirectional coupling")
    if spec.t_l < 0 or spec.t_r < 0:
        raise ValueError("gauge transform requires t_l > 0 and t_r > 0")
    n = int(spec.n)
    r = math.sqrt(spec.t_l / spec.t_r)
    diag = r ** np.arange(1, n + 1, dtype=float)
    s = np.diag(diag).astype(complex)
    h = build(spec)
    h_sym = (diag[:, None] * h) / diag[None, :]
    return s, h_sym


def gauge_metric(spec: HamiltonianSpec) -> np.ndarray:
    """``eta = s^dagger s`` from :func:`gauge_transform`."""
    s, _ = gauge_transform(spec)
    return s.conj().T @ s
