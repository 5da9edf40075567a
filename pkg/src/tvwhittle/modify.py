"""Bias reductions for short-segment periodograms.

Three families are supported: Hanning tapering (optionally rescaled to the
raw segment variance), prewhitening through a fitted AR filter, and
boundary correction through the complete DFT. Filters for the last two are
fitted per segment by Burg's method with the order chosen by Hannan-Quinn.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateSegmentWarning, DomainError, InvalidInputError
from .localper import segment_dft
from .spectral import TWO_PI, FourierGrid, is_stable, transfer_sq
from .tvar import r_to_phi

MODIFICATIONS = ("none", "taper", "taper_rescaled", "prewhiten", "boundary_correct")


@dataclass(frozen=True)
class TaperWindow:
    weights: np.ndarray
    normalizer: float
    rescale: bool = False

    @property
    def N(self) -> int:
        return int(self.weights.size)

    @classmethod
    def identity(cls, N: int) -> "TaperWindow":
        return cls(weights=np.ones(N), normalizer=float(N))


def hanning_window(N: int, rescale: bool = False) -> TaperWindow:
    """Hanning taper ``h(s/N) = (1 - cos(2 pi s / N)) / 2`` for ``s = 1..N``.

    The normaliser is ``H_N = sum_{j=0}^{N-1} h(j/N)^2``.
    """
    if N < 2:
        raise InvalidInputError(f"taper length must be >= 2, got {N}")
    s = np.arange(1, N + 1)
    w = 0.5 * (1.0 - np.cos(TWO_PI * s / N))
    j = np.arange(N)
    H = float(np.sum((0.5 * (1.0 - np.cos(TWO_PI * j / N))) ** 2))
    return TaperWindow(weights=w, normalizer=H, rescale=rescale)


def rescale_tapered_segment(raw, tapered) -> np.ndarray:
    """Scale ``tapered`` so that its empirical variance matches ``raw``.

    Degenerate segments (zero variance in either) are returned unscaled
    with a :class:`DegenerateSegmentWarning`.
    """
    raw = np.asarray(raw, dtype=float)
    tapered = np.asarray(tapered, dtype=float)
    sd_raw, sd_tap = np.std(raw), np.std(tapered)
    if sd_raw == 0 or sd_tap == 0:
        warnings.warn("zero-variance segment left unscaled", DegenerateSegmentWarning, stacklevel=2)
        return tapered
    return tapered * (sd_raw / sd_tap)


@dataclass(frozen=True)
class FittedAR:
    coefficients: np.ndarray
    sigma2: float
    criterion: np.ndarray | None = None

    @property
    def order(self) -> int:
        return int(self.coefficients.size)


def burg(x, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Burg reflection coefficients and innovation variances for orders 0..order.

    Returns ``(r, sigma2)`` with ``r`` of length ``order`` (the partial
    autocorrelations, all in (-1, 1)) and ``sigma2`` of length ``order + 1``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if order >= n:
        raise InvalidInputError(f"Burg order {order} needs more than {n} observations")
    r = np.zeros(order)
    sigma2 = np.empty(order + 1)
    sigma2[0] = x @ x / n
    f, b = x[1:], x[:-1]
    for k in range(order):
        den = f @ f + b @ b
        rk = 2.0 * (f @ b) / den if den > 0 else 0.0
        r[k] = rk
        sigma2[k + 1] = sigma2[k] * (1.0 - rk * rk)
        f, b = (f - rk * b)[1:], (b - rk * f)[:-1]
    return r, sigma2


def fit_ar_hq(segment, p_max: int = 10) -> FittedAR:
    """Fit AR(p), p = 0..p_max, by Burg and keep the Hannan-Quinn minimiser.

    ``HQ(p) = log sigma2_p + 2 p log(log n) / n``.
    """
    x = np.asarray(segment, dtype=float)
    n = x.size
    if n <= p_max + 1:
        raise InvalidInputError(f"segment of length {n} too short for p_max={p_max}")
    r, sigma2 = burg(x, p_max)
    if sigma2[0] == 0:
        return FittedAR(np.zeros(0), 0.0, np.zeros(p_max + 1))
    p = np.arange(p_max + 1)
    with np.errstate(divide="ignore"):
        hq = np.log(sigma2) + 2.0 * p * np.log(np.log(n)) / n
    best = int(np.argmin(hq))
    return FittedAR(r_to_phi(r[:best]), float(sigma2[best]), hq)


def _coefficients(fitted) -> np.ndarray:
    phi = fitted.coefficients if isinstance(fitted, FittedAR) else np.atleast_1d(fitted)
    phi = np.asarray(phi, dtype=float)
    if not is_stable(phi):
        raise DomainError(f"filter {phi} is not stable")
    return phi


def _omegas(grid) -> np.ndarray:
    return grid.frequencies if isinstance(grid, FourierGrid) else np.atleast_1d(np.asarray(grid, dtype=float))


def prewhiten_periodogram(segment, fitted, grid) -> np.ndarray:
    """Periodogram of AR residuals recoloured by ``|phi(e^{-i w})|^{-2}``.

    Residuals ``e_t = x_t - sum_j phi_j x_{t-j}`` exist for ``t = p+1..N``;
    their periodogram keeps the original positions (so frequencies register
    with the length-N grid) and is normalised by ``2 pi (N - p)``.
    """
    x = np.asarray(segment, dtype=float)
    phi = _coefficients(fitted)
    p = phi.size
    resid = np.zeros_like(x)
    resid[p:] = x[p:] - sum(phi[j] * x[p - 1 - j : x.size - 1 - j] for j in range(p)) if p else x
    omegas = _omegas(grid)
    J = segment_dft(resid, omegas)
    return np.abs(J) ** 2 / (TWO_PI * (x.size - p)) / transfer_sq(phi, omegas)


def predictive_dft(segment, fitted, grid) -> np.ndarray:
    """DFT of the best linear predictions of the series beyond both ends.

    Under a stable AR(p) filter the forecasts past ``T`` and the backcasts
    before ``1`` obey the AR recursion, so both infinite tails have closed
    forms in ``phi(w) = 1 - sum_j phi_j exp(-i w j)``::

        right = sum_j phi_j sum_{u=T-j+1}^T x_u e^{-i w (u + j)} / phi(w)
        left  = sum_j phi_j sum_{u=1}^{j}   x_u e^{-i w (u - j)} / conj(phi(w))

    The sign convention is that of :func:`tvwhittle.spectral.dft`.
    """
    x = np.asarray(segment, dtype=float)
    phi = _coefficients(fitted)
    omegas = _omegas(grid)
    p = phi.size
    T = x.size
    if p == 0:
        return np.zeros(omegas.shape, dtype=complex)
    if T < p:
        raise InvalidInputError(f"segment of length {T} shorter than filter order {p}")
    lags = np.arange(1, p + 1)
    poly = 1.0 - np.exp(-1j * np.multiply.outer(omegas, lags)) @ phi
    right = np.zeros(omegas.shape, dtype=complex)
    left = np.zeros(omegas.shape, dtype=complex)
    for j in range(1, p + 1):
        u_hi = np.arange(T - j + 1, T + 1)
        right += phi[j - 1] * (np.exp(-1j * np.multiply.outer(omegas, u_hi + j)) @ x[u_hi - 1])
        u_lo = np.arange(1, j + 1)
        left += phi[j - 1] * (np.exp(-1j * np.multiply.outer(omegas, u_lo - j)) @ x[u_lo - 1])
    return right / poly + left / np.conj(poly)


def complete_periodogram(segment, fitted, grid, window: TaperWindow | None = None) -> np.ndarray:
    """Complete periodogram ``Re[(J + J_pred) conj(J_h)] / (2 pi sum_s h_s)``.

    Without a taper ``h = 1`` and the normaliser is ``2 pi N``. Negative
    values are possible and are returned as-is.
    """
    x = np.asarray(segment, dtype=float)
    omegas = _omegas(grid)
    J = segment_dft(x, omegas)
    complete = J + predictive_dft(x, fitted, omegas)
    if window is None:
        return np.real(complete * np.conj(J)) / (TWO_PI * x.size)
    Jh = segment_dft(x, omegas, window.weights)
    return np.real(complete * np.conj(Jh)) / (TWO_PI * np.sum(window.weights))


@dataclass(frozen=True)
class Modification:
    """Which periodogram estimator to use on each segment.

    ``clip_negative`` truncates negative complete-periodogram ordinates at
    zero when the likelihood data are prepared. The estimator functions
    themselves always return the signed values.
    """

    kind: str = "none"
    with_taper: bool = True
    p_max: int = 10
    clip_negative: bool = False

    def __post_init__(self):
        if self.kind not in MODIFICATIONS:
            raise InvalidInputError(f"unknown modification {self.kind!r}; choose from {MODIFICATIONS}")

    @property
    def label(self) -> str:
        return {
            "none": "raw", "taper": "TA", "taper_rescaled": "TR", "prewhiten": "PW",
            "boundary_correct": "BC" if self.with_taper else "BCN",
        }[self.kind]


def apply_modification(scheme: Modification, segment, grid) -> np.ndarray:
    """Periodogram ordinates of one segment under ``scheme``."""
    x = np.asarray(segment, dtype=float)
    omegas = _omegas(grid)
    N = x.size
    kind = scheme.kind
    if kind == "none":
        return np.abs(segment_dft(x, omegas)) ** 2 / (TWO_PI * N)
    if kind == "taper":
        win = hanning_window(N)
        return np.abs(segment_dft(x, omegas, win.weights)) ** 2 / (TWO_PI * win.normalizer)
    if kind == "taper_rescaled":
        win = hanning_window(N, rescale=True)
        scaled = rescale_tapered_segment(x, x * win.weights)
        return np.abs(segment_dft(scaled, omegas)) ** 2 / (TWO_PI * N)
    fitted = fit_ar_hq(x, scheme.p_max)
    if kind == "prewhiten":
        return prewhiten_periodogram(x, fitted, omegas)
    window = hanning_window(N) if scheme.with_taper else None
    return complete_periodogram(x, fitted, omegas, window)
