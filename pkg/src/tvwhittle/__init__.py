"""Whittle-type likelihoods and particle Gibbs inference for time-varying AR models."""
from .exceptions import (
    BoundaryError,
    DegeneratePosteriorError,
    DegenerateSegmentWarning,
    DomainError,
    GeometryError,
    InvalidInputError,
    NumericalCollapseError,
)
from .inference import GibbsConfig, PosteriorDraws, Priors, gibbs_run, interpolate_path, posterior_quantiles
from .likelihood import LikelihoodSpec, PreparedData, loglik, prepare
from .modify import Modification
from .spectral import ARSpec, ar_spectral_density, fourier_frequencies, periodogram
from .tvar import TvarPath, simulate_tvar, theta_to_phi

__version__ = "0.1.0"

__all__ = [
    "ARSpec", "BoundaryError", "DegeneratePosteriorError", "DegenerateSegmentWarning", "DomainError",
    "GeometryError", "GibbsConfig", "InvalidInputError", "LikelihoodSpec", "Modification",
    "NumericalCollapseError", "PosteriorDraws", "PreparedData", "Priors", "TvarPath",
    "ar_spectral_density", "fourier_frequencies", "gibbs_run", "interpolate_path", "loglik",
    "periodogram", "posterior_quantiles", "prepare", "simulate_tvar", "theta_to_phi",
]
