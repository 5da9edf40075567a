"""Fourier primitives for stationary series.

Conventions
-----------
The DFT is ``J(w) = sum_{t=1}^T x_t exp(-i w t)`` with time indexed from 1.
FFT routines index from 0, so FFT output is multiplied by ``exp(-i w)``
to land on this convention. ``|J|`` is unaffected, but the phase matters
for the predictive DFT in :mod:`tvwhittle.modify`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import DegeneratePosteriorError, DomainError, InvalidInputError

TWO_PI = 2.0 * np.pi

#: Posterior quantile levels used by the perturbation measure.
QUANTILE_PROBS = (0.025, 0.10, 0.25, 0.50, 0.75, 0.90, 0.975)


def as_series(x, min_length: int = 2) -> np.ndarray:
    """Validate a real-valued series and return it as a float array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"series must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise InvalidInputError(f"series needs at least {min_length} values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("series contains non-finite values")
    return arr


@dataclass(frozen=True)
class FourierGrid:
    """Angular Fourier frequencies ``2*pi*k/T_origin`` strictly inside (0, pi].

    ``pi`` is present only when built with ``include_boundary=True``.
    """

    k: np.ndarray
    T_origin: int

    @property
    def frequencies(self) -> np.ndarray:
        return TWO_PI * self.k / self.T_origin

    def __len__(self) -> int:
        return int(self.k.size)


@dataclass(frozen=True)
class Periodogram:
    grid: FourierGrid
    ordinates: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies


@dataclass(frozen=True)
class ARSpec:
    """Stable AR(p) model ``phi(L) x_t = eps_t`` with innovation variance sigma2."""

    phi: np.ndarray
    sigma2: float = 1.0

    def __post_init__(self):
        phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        if phi.ndim != 1:
            raise InvalidInputError("phi must be a vector")
        object.__setattr__(self, "phi", phi)
        if not self.sigma2 > 0:
            raise DomainError(f"innovation variance must be positive, got {self.sigma2}")
        if not is_stable(phi):
            raise DomainError(f"AR coefficients {phi} are not stable")

    @property
    def order(self) -> int:
        return int(self.phi.size)


def companion_moduli(phi) -> np.ndarray:
    """Eigenvalue moduli of the AR companion matrix (empty for p=0)."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    p = phi.size
    if p == 0:
        return np.empty(0)
    C = np.zeros((p, p))
    C[0] = phi
    C[1:, :-1] = np.eye(p - 1)
    return np.abs(np.linalg.eigvals(C))


def is_stable(phi) -> bool:
    """True when every companion eigenvalue lies strictly inside the unit circle."""
    moduli = companion_moduli(phi)
    return bool(np.all(moduli < 1.0))


def fourier_frequencies(T: int, include_boundary: bool = False) -> FourierGrid:
    """Positive Fourier frequencies of a length-``T`` series.

    Returns ``2*pi*k/T`` for ``k = 1 .. ceil(T/2) - 1``; zero is never
    included and ``pi`` (even ``T`` only) is added when ``include_boundary``.
    """
    if int(T) != T or T < 2:
        raise InvalidInputError(f"T must be an integer >= 2, got {T}")
    T = int(T)
    k = np.arange(1, -(-T // 2))
    if include_boundary and T % 2 == 0:
        k = np.append(k, T // 2)
    return FourierGrid(k=k, T_origin=T)


def dft_naive(x, omega) -> np.ndarray | complex:
    """Direct O(T*K) evaluation of ``sum_t x_t exp(-i omega t)``."""
    x = np.asarray(x, dtype=float)
    t = np.arange(1, x.size + 1)
    omega_arr = np.asarray(omega, dtype=float)
    out = np.exp(-1j * np.multiply.outer(omega_arr, t)) @ x
    return out if omega_arr.ndim else complex(out)


def dft(x, omega) -> np.ndarray | complex:
    """DFT of ``x`` at a single frequency, an array of frequencies, or a FourierGrid.

    A :class:`FourierGrid` built on ``len(x)`` is evaluated with one FFT.
    """
    x = as_series(x, min_length=1)
    if isinstance(omega, FourierGrid):
        if omega.T_origin != x.size:
            raise InvalidInputError(
                f"grid built for T={omega.T_origin} but series has length {x.size}"
            )
        full = np.fft.fft(x)
        return full[omega.k] * np.exp(-1j * omega.frequencies)
    return dft_naive(x, omega)


def periodogram(x, grid: FourierGrid | None = None) -> Periodogram:
    """Raw periodogram ``|J(w_k)|^2 / (2 pi T)`` on the Fourier grid."""
    x = as_series(x)
    if grid is None:
        grid = fourier_frequencies(x.size)
    if grid.T_origin != x.size:
        raise InvalidInputError(
            f"grid built for T={grid.T_origin} but series has length {x.size}"
        )
    J = dft(x, grid)
    return Periodogram(grid=grid, ordinates=np.abs(J) ** 2 / (TWO_PI * x.size))


def transfer_sq(phi, omega) -> np.ndarray:
    """Squared modulus ``|1 - sum_j phi_j exp(-i omega j)|^2``.

    ``phi`` may carry leading batch dimensions (..., p); ``omega`` broadcasts
    against them.
    """
    phi = np.asarray(phi, dtype=float)
    omega = np.asarray(omega, dtype=float)
    p = phi.shape[-1] if phi.ndim else 0
    if p == 0:
        return np.ones(np.broadcast_shapes(phi.shape[:-1], omega.shape))
    lags = np.arange(1, p + 1)
    angle = omega[..., None] * lags
    re = 1.0 - np.sum(phi * np.cos(angle), axis=-1)
    im = np.sum(phi * np.sin(angle), axis=-1)
    return re * re + im * im


def ar_sdf(phi, sigma2, omega) -> np.ndarray:
    """Unchecked AR spectral density; see :func:`ar_spectral_density`."""
    return np.asarray(sigma2) / (TWO_PI * transfer_sq(phi, omega))


def ar_spectral_density(spec: ARSpec, omega) -> np.ndarray | float:
    """Spectral density ``sigma2/(2 pi) |phi(e^{-i omega})|^{-2}`` of a stable AR model."""
    if not isinstance(spec, ARSpec):
        spec = ARSpec(*spec)
    out = ar_sdf(spec.phi, spec.sigma2, omega)
    return out if np.ndim(out) else float(out)


def whittle_loglik(pg: Periodogram, f: Callable | np.ndarray, mirrored: bool = False) -> float:
    """Whittle log-likelihood ``-1/2 sum_k [log f(w_k) + I(w_k)/f(w_k)]``.

    ``f`` is either a callable of angular frequency or the values on the grid.
    The grid only holds positive frequencies; with ``mirrored=True`` each
    ordinate also stands in for its negative-frequency twin, which doubles the
    sum and yields the log-density of independent exponentials with means f.
    """
    omega = pg.frequencies
    fv = np.asarray(f(omega) if callable(f) else f, dtype=float)
    if fv.shape != omega.shape:
        raise InvalidInputError("spectral density values do not match the grid")
    if np.any(~(fv > 0)):
        raise DomainError("spectral density must be strictly positive on the grid")
    ll = -0.5 * float(np.sum(np.log(fv) + pg.ordinates / fv))
    return 2.0 * ll if mirrored else ll


def exact_ar1_loglik(x, phi, sigma2: float = 1.0):
    """Exact Gaussian AR(1) log-likelihood with a stationary first observation.

    ``phi`` may be an array, in which case the log-likelihood is evaluated
    at every value through the sufficient statistics of ``x``.
    """
    x = as_series(x)
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(np.abs(phi_arr) >= 1.0):
        raise DomainError("|phi| must be < 1 for a stationary AR(1)")
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    T = x.size
    s_lead = float(x[1:] @ x[1:])
    s_cross = float(x[1:] @ x[:-1])
    s_lag = float(x[:-1] @ x[:-1])
    one_m = 1.0 - phi_arr**2
    quad = one_m * x[0] ** 2 + s_lead - 2.0 * phi_arr * s_cross + phi_arr**2 * s_lag
    out = -0.5 * T * np.log(TWO_PI * sigma2) + 0.5 * np.log(one_m) - 0.5 * quad / sigma2
    return out if out.ndim else float(out)


def ar1_whittle_loglik(x, phi, sigma2: float = 1.0, mirrored: bool = True):
    """Whittle log-likelihood of an AR(1) model evaluated over an array of ``phi``."""
    pg = periodogram(x)
    phi_arr = np.atleast_1d(np.asarray(phi, dtype=float))
    f = ar_sdf(phi_arr[:, None, None], sigma2, pg.frequencies[None, :])
    ll = -0.5 * np.sum(np.log(f) + pg.ordinates / f, axis=1)
    if mirrored:
        ll = 2.0 * ll
    return ll if np.ndim(phi) else float(ll[0])


@dataclass(frozen=True)
class GridPosterior:
    grid: np.ndarray
    weights: np.ndarray
    loglik: np.ndarray
    probs: tuple
    quantiles: np.ndarray

    @property
    def mode(self) -> float:
        """Grid maximiser of the likelihood (uniform prior, so also the MAP)."""
        return float(self.grid[np.argmax(self.loglik)])


def default_phi_grid(n: int = 1999, bound: float = 0.999) -> np.ndarray:
    return np.linspace(-bound, bound, n)


def grid_posterior(x, grid_phi, loglik: Callable, probs=QUANTILE_PROBS) -> GridPosterior:
    """Posterior on a grid of AR(1) coefficients under a uniform prior.

    ``loglik(x, grid_phi)`` must return one log-likelihood per grid value.
    Quantiles come from linear interpolation of the cumulative grid weights.
    """
    grid_phi = np.asarray(grid_phi, dtype=float)
    if grid_phi.ndim != 1 or grid_phi.size == 0:
        raise InvalidInputError("grid must be a non-empty vector")
    ll = np.asarray(loglik(x, grid_phi), dtype=float).reshape(grid_phi.shape)
    top = np.max(ll)
    if not np.isfinite(top):
        raise DegeneratePosteriorError("all grid log-likelihoods are -inf or nan")
    w = np.exp(ll - top)
    w /= w.sum()
    cdf = np.cumsum(w)
    q = np.interp(np.asarray(probs), cdf, grid_phi)
    return GridPosterior(grid=grid_phi, weights=w, loglik=ll, probs=tuple(probs), quantiles=q)
