"""Time evolution under ``h`` and ``h^dagger`` and derived observables.

States obey ``d psi/dt = -i h psi`` (right evolution) and
``d phi/dt = -i h^dagger phi`` (adjoint evolution), with hbar = 1.  The
biorthogonal overlap ``sum_j conj(y_j) x_j`` is constant along any pair of
such trajectories.

Trajectories are stored as arrays of shape ``(len(times), n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numkernel
from .model import HamiltonianSpec

__all__ = [
    "METHODS",
    "DEFAULT_DT",
    "RK4_SUBSTEP",
    "RESYNC_STEPS",
    "OVERFLOW_LIMIT",
    "ZERO_SENTINEL",
    "AmplitudeOverflowError",
    "StateTrajectory",
    "ObservableSeries",
    "time_grid",
    "localized_state",
    "normalized",
    "propagate",
    "propagate_adjoint",
    "propagate_pair",
    "observables",
    "fit_exponential_rate",
    "fit_power_exponent",
    "peak_transient",
]

METHODS = ("expm-step", "expm-direct", "rk4")
DEFAULT_DT = 0.01
RK4_SUBSTEP = 1e-3
# expm-step re-anchors on the exact propagator this often
RESYNC_STEPS = 1000
OVERFLOW_LIMIT = 1e150
# stands in for log(0) in the signed log overlap; plotting code masks NaN
ZERO_SENTINEL = math.nan
MIN_FIT_SAMPLES = 8


class AmplitudeOverflowError(OverflowError):
    """An amplitude passed :data:`OVERFLOW_LIMIT`."""

    def __init__(self, time: float, last_valid_time: float):
        super().__init__(
            f"amplitude exceeded {OVERFLOW_LIMIT:g} at t={time:g} "
            f"(last valid sample t={last_valid_time:g}); shorten t_max"
        )
        self.time = time
        self.last_valid_time = last_valid_time


def time_grid(t_max: float, dt: float = DEFAULT_DT) -> np.ndarray:
    """Uniform grid ``0, dt, ..., t_max`` (``t_max`` rounded to a step)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_max <= dt:
        raise ValueError("t_max must exceed dt")
    steps = int(round(t_max / dt))
    return dt * np.arange(steps + 1, dtype=float)


def localized_state(n: int, site: int) -> np.ndarray:
    """Unit vector on ``site`` (1-based, as in the chain labels)."""
    if not 1 <= site <= n:
        raise ValueError(f"site must be in 1..{n}, got {site}")
    v = np.zeros(n, dtype=complex)
    v[site - 1] = 1.0
    return v


def normalized(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("cannot normalise a zero or non-finite vector")
    return v / norm


@dataclass(frozen=True)
class StateTrajectory:
    """Sampled states on a shared time grid.

    ``psi`` holds right-evolved states and ``phi`` adjoint-evolved ones; at
    least one of them is present.
    """

    times: np.ndarray
    psi: np.ndarray | None = None
    phi: np.ndarray | None = None
    spec: HamiltonianSpec | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size == 0 or times[0] != 0.0:
            raise ValueError("times must be a non-empty sequence starting at 0")
        if self.psi is None and self.phi is None:
            raise ValueError("trajectory needs psi, phi or both")
        for name in ("psi", "phi"):
            arr = getattr(self, name)
            if arr is not None and np.shape(arr)[0] != times.size:
                raise ValueError(f"{name} has {np.shape(arr)[0]} samples, grid has {times.size}")


@dataclass(frozen=True)
class ObservableSeries:
    """Real-valued series derived from a trajectory.

    Matrices are indexed ``[time, site]``.  Right-state fields are ``None``
    when the trajectory carries no ``psi``; left and biorthogonal fields are
    ``None`` unless ``phi`` (and, for the overlaps, ``psi``) is present.
    """

    times: np.ndarray
    per_site_amplitude: np.ndarray | None
    euclidean_norm: np.ndarray | None
    left_amplitude: np.ndarray | None = None
    left_norm: np.ndarray | None = None
    bi_overlap: np.ndarray | None = None
    bi_norm: np.ndarray | None = None
    signed_log_overlap: np.ndarray | None = None

    @property
    def bi_overlap_max_imag(self) -> float:
        """Largest ``|Im(conj(y_j) x_j)|`` seen, a realness diagnostic."""
        if self.bi_overlap is None:
            return math.nan
        return float(np.max(np.abs(self.bi_overlap.imag)))


def _check_grid(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0:
        raise ValueError("times must start at 0")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValueError("times must be strictly increasing")
    return t


def _guard(state: np.ndarray, times: np.ndarray, k: int) -> None:
    if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > OVERFLOW_LIMIT:
        raise AmplitudeOverflowError(float(times[k]), float(times[k - 1]) if k else 0.0)


def _exact(gen: np.ndarray, t: float, k: int, times: np.ndarray) -> np.ndarray:
    try:
        return numkernel.expm(-1j * gen * t)
    except numkernel.ExpmOverflowError:
        raise AmplitudeOverflowError(t, float(times[k - 1]) if k else 0.0) from None


def _evolve(gen, state0, times, method, substep) -> np.ndarray:
    gen = numkernel.as_matrix(gen)
    state0 = np.asarray(state0, dtype=complex)
    if state0.shape != (gen.shape[0],):
        raise numkernel.DimensionError(
            f"initial state has shape {state0.shape}, operator is {gen.shape}"
        )
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    t = _check_grid(times)
    out = np.empty((t.size, state0.size), dtype=complex)
    out[0] = state0
    if t.size == 1:
        return out

    if method == "expm-step":
        dt = t[1] - t[0]
        steps = np.diff(t)
        if np.max(np.abs(steps - dt)) > 1e-9 * dt + 8 * np.finfo(float).eps * t[-1]:
            raise ValueError("expm-step needs a uniform time grid; use expm-direct or rk4")
        step = _exact(gen, dt, 1, t)
        state = state0
        for k in range(1, t.size):
            if k % RESYNC_STEPS == 0:
                state = _exact(gen, t[k], k, t) @ state0
            else:
                state = step @ state
            _guard(state, t, k)
            out[k] = state
    elif method == "expm-direct":
        for k in range(1, t.size):
            out[k] = _exact(gen, t[k], k, t) @ state0
            _guard(out[k], t, k)
    else:
        # the system is linear and autonomous, so one RK4 substep is a fixed
        # matrix; build it once per interval length and compose m substeps
        a = -1j * gen
        maps: dict = {}
        state = state0.copy()
        for k in range(1, t.size):
            span = t[k] - t[k - 1]
            m = max(1, int(math.ceil(span / substep - 1e-9)))
            key = (m, round(span / m, 15))
            if key not in maps:
                maps[key] = _rk4_map(a, span / m, m)
            state = maps[key] @ state
            _guard(state, t, k)
            out[k] = state
    return out


def _rk4_map(a: np.ndarray, h: float, m: int) -> np.ndarray:
    """Matrix of ``m`` classical RK4 substeps of size ``h`` for ``x' = a x``."""
    state = np.eye(a.shape[0], dtype=complex)
    k1 = a @ state
    k2 = a @ (state + 0.5 * h * k1)
    k3 = a @ (state + 0.5 * h * k2)
    k4 = a @ (state + h * k3)
    step = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    total = state
    for _ in range(m):
        total = step @ total
    return total


def propagate(h, psi0, times, method: str = "expm-step", *, substep: float = RK4_SUBSTEP,
              spec: HamiltonianSpec | None = None) -> StateTrajectory:
    """Right evolution ``psi(t) = exp(-i h t) psi0`` sampled on ``times``.

    ``expm-step`` reuses one propagator for the uniform step (re-anchored
    every :data:`RESYNC_STEPS` samples), ``expm-direct`` exponentiates at
    every sample, ``rk4`` integrates with fixed substeps no longer than
    ``substep``.
    """
    t = _check_grid(times)
    return StateTrajectory(t, psi=_evolve(h, psi0, t, method, substep), spec=spec)


def propagate_adjoint(h, phi0, times, method: str = "expm-step", *, substep: float = RK4_SUBSTEP,
                      spec: HamiltonianSpec | None = None) -> StateTrajectory:
    """Adjoint evolution ``phi(t) = exp(-i h^dagger t) phi0``."""
    t = _check_grid(times)
    hd = numkernel.as_matrix(h).conj().T
    return StateTrajectory(t, phi=_evolve(hd, phi0, t, method, substep), spec=spec)


def propagate_pair(h, psi0, phi0=None, times=None, method: str = "expm-step", *,
                   substep: float = RK4_SUBSTEP, spec: HamiltonianSpec | None = None) -> StateTrajectory:
    """Evolve ``psi0`` under ``h`` and ``phi0`` (default ``psi0``) under ``h^dagger``."""
    if times is None:
        raise ValueError("times is required")
    if phi0 is None:
        phi0 = psi0
    right = propagate(h, psi0, times, method, substep=substep)
    left = propagate_adjoint(h, phi0, times, method, substep=substep)
    return StateTrajectory(right.times, psi=right.psi, phi=left.phi, spec=spec)


def observables(traj: StateTrajectory) -> ObservableSeries:
    amp = norm = left_amp = left_norm = overlap = bi_norm = slog = None
    if traj.psi is not None:
        amp = np.abs(traj.psi)
        norm = np.sqrt(np.sum(amp ** 2, axis=1))
    if traj.phi is not None:
        left_amp = np.abs(traj.phi)
        left_norm = np.sqrt(np.sum(left_amp ** 2, axis=1))
        if traj.psi is not None:
            overlap = traj.phi.conj() * traj.psi
            bi_norm = np.sum(overlap, axis=1)
            magnitude = np.abs(overlap)
            slog = np.full(magnitude.shape, ZERO_SENTINEL)
            nonzero = magnitude > 0
            slog[nonzero] = np.sign(overlap.real[nonzero]) * np.log(np.sqrt(magnitude[nonzero]))
    return ObservableSeries(
        times=np.asarray(traj.times, dtype=float),
        per_site_amplitude=amp,
        euclidean_norm=norm,
        left_amplitude=left_amp,
        left_norm=left_norm,
        bi_overlap=overlap,
        bi_norm=bi_norm,
        signed_log_overlap=slog,
    )


def _window(times, values, window, *, positive_times=False):
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise ValueError("times and values must have the same length")
    lo, hi = window
    if positive_times and lo <= 0:
        raise ValueError("power-law fit needs a window with t_lo > 0")
    slack = 1e-9 * max(1.0, abs(hi))
    mask = (t >= lo - slack) & (t <= hi + slack)
    if np.count_nonzero(mask) < MIN_FIT_SAMPLES:
        raise ValueError(
            f"window {window} holds {np.count_nonzero(mask)} samples, need {MIN_FIT_SAMPLES}"
        )
    t, v = t[mask], v[mask]
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("fit needs strictly positive finite values in the window")
    return t, v


def fit_exponential_rate(times, values, window) -> float:
    """Least-squares slope of ``log(value)`` against ``t`` inside ``window``."""
    t, v = _window(times, values, window)
    return float(np.polyfit(t, np.log(v), 1)[0])


def fit_power_exponent(times, values, window) -> float:
    """Least-squares slope of ``log(value)`` against ``log(t)`` inside ``window``."""
    t, v = _window(times, values, window, positive_times=True)
    return float(np.polyfit(np.log(t), np.log(v), 1)[0])


def peak_transient(times, values) -> tuple[float, float]:
    """Grid maximum, refined by a parabola through it and its two neighbours."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size == 0 or t.shape != v.shape:
        raise ValueError("need a non-empty series with matching times")
    k = int(np.argmax(v))
    if k == 0 or k == t.size - 1:
        return float(t[k]), float(v[k])
    a, b, c = np.polyfit(t[k - 1:k + 2], v[k - 1:k + 2], 2)
    if a >= 0:
        return float(t[k]), float(v[k])
    t_peak = min(max(-b / (2 * a), t[k - 1]), t[k + 1])
    v_peak = (a * t_peak + b) * t_peak + c
    return float(t_peak), float(max(v_peak, v[k]))
