"""Non-Hermitian nonreciprocal chains: spectra, biorthogonal structure and dynamics."""

from .dynamics import (
    ObservableSeries,
    StateTrajectory,
    fit_exponential_rate,
    fit_power_exponent,
    localized_state,
    observables,
    peak_transient,
    propagate,
    propagate_adjoint,
    propagate_pair,
    time_grid,
)
from .model import (
    HamiltonianSpec,
    build,
    check_pseudo_hermitian,
    gauge_metric,
    gauge_transform,
    is_hermitian,
    is_normal,
)
from .spectral import SpectralData, analyze, max_growth_rate, spectrum_is_real

__version__ = "0.1.0"
