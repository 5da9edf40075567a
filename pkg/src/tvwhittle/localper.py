"""Time-localised periodograms: block segments, the moving periodogram and the preperiodogram.

Times are 1-based throughout, matching the tvAR notation; array slicing
converts at the last moment.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import BoundaryError, GeometryError, InvalidInputError
from .spectral import TWO_PI, FourierGrid, as_series, fourier_frequencies


@dataclass(frozen=True)
class SegmentGeometry:
    T: int
    N: int
    S: int

    @property
    def M(self) -> int:
        return (self.T - self.N) // self.S + 1

    @property
    def centers(self) -> np.ndarray:
        """Segment centres ``t_j = S(j-1) + N/2``."""
        return self.S * np.arange(self.M) + self.N // 2

    @property
    def starts(self) -> np.ndarray:
        """0-based index of the first observation of each segment."""
        return self.S * np.arange(self.M)


def segment_geometry(T: int, N: int, S: int) -> SegmentGeometry:
    """Validate and build the sliding-window geometry of the block Whittle likelihood."""
    if not (1 <= S <= N <= T):
        raise GeometryError(f"need 1 <= S <= N <= T, got T={T}, N={N}, S={S}")
    if N % 2:
        raise GeometryError(f"segment length N={N} must be even so that N/2 is a time index")
    if (T - N) % S:
        excess = (T - N) % S
        raise GeometryError(
            f"(T - N) = {T - N} is not divisible by S = {S}; "
            f"trim {excess} observations (e.g. use T = {T - excess})"
        )
    return SegmentGeometry(T=int(T), N=int(N), S=int(S))


def segment_dft(segment, omegas, weights=None) -> np.ndarray:
    """``sum_{s=1}^N h_s x_s exp(-i w s)`` for every frequency in ``omegas``."""
    segment = np.asarray(segment, dtype=float)
    if weights is not None:
        segment = segment * weights
    s = np.arange(1, segment.shape[-1] + 1)
    basis = np.exp(-1j * np.multiply.outer(np.asarray(omegas, dtype=float), s))
    return segment @ basis.T if segment.ndim > 1 else basis @ segment


def _window_parts(window, N):
    if window is None:
        return None, float(N)
    if window.weights.size != N:
        raise InvalidInputError(f"taper has length {window.weights.size}, segment has {N}")
    return window.weights, float(window.normalizer)


def segment_slice(t: int, N: int) -> slice:
    """0-based slice of the length-N segment around time t.

    Even N covers ``t - N/2 + 1 .. t + N/2`` (1-based); odd N is centred,
    covering ``t - (N-1)/2 .. t + (N-1)/2``.
    """
    lo = t - N // 2 if N % 2 == 0 else t - (N - 1) // 2 - 1
    return slice(lo, lo + N)


def local_periodogram(x, t: int, N: int, grid=None, window=None) -> np.ndarray:
    """Local (optionally tapered) periodogram of the segment around time ``t``.

    ``grid`` is a FourierGrid or an array of angular frequencies and
    defaults to the positive Fourier frequencies of the segment.
    """
    x = np.asarray(x, dtype=float)
    sl = segment_slice(t, N)
    if sl.start < 0 or sl.stop > x.size:
        raise BoundaryError(f"segment of length {N} around t={t} leaves 1..{x.size}")
    if grid is None:
        grid = fourier_frequencies(N)
    omegas = grid.frequencies if isinstance(grid, FourierGrid) else np.asarray(grid, dtype=float)
    weights, norm = _window_parts(window, N)
    J = segment_dft(x[sl], omegas, weights)
    return np.abs(J) ** 2 / (TWO_PI * norm)


@dataclass(frozen=True)
class BlockPeriodogram:
    geometry: SegmentGeometry
    grid: FourierGrid
    ordinates: np.ndarray  # (M, K)

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies


def segments(x, geometry: SegmentGeometry) -> np.ndarray:
    """Stack the M segments as rows of an (M, N) array."""
    x = np.asarray(x, dtype=float)
    if x.size != geometry.T:
        raise InvalidInputError(f"geometry built for T={geometry.T}, series has {x.size}")
    windows = np.lib.stride_tricks.sliding_window_view(x, geometry.N)
    return windows[:: geometry.S][: geometry.M]


def block_periodogram(x, geometry: SegmentGeometry, window=None) -> BlockPeriodogram:
    """Local periodograms at every segment centre on the segment Fourier grid."""
    x = as_series(x)
    grid = fourier_frequencies(geometry.N)
    segs = segments(x, geometry)
    weights, norm = _window_parts(window, geometry.N)
    if weights is not None:
        segs = segs * weights
    # FFT indexes from 0; the modulus is unaffected by the t=1 phase convention
    spec = np.fft.fft(segs, axis=1)[:, grid.k]
    return BlockPeriodogram(geometry, grid, np.abs(spec) ** 2 / (TWO_PI * norm))


@dataclass(frozen=True)
class MovingPeriodogram:
    """One periodogram ordinate per time ``t = m+1 .. T-m``.

    ``times`` are 1-based; ``freq_index`` holds ``mod(t) = 1 + (t-1) mod m``.
    """

    T: int
    m: int
    times: np.ndarray
    freq_index: np.ndarray
    ordinates: np.ndarray

    @property
    def N(self) -> int:
        return 2 * self.m + 1

    @property
    def frequencies(self) -> np.ndarray:
        return TWO_PI * self.freq_index / self.N


def moving_frequency_index(t, m: int) -> np.ndarray:
    return 1 + (np.asarray(t) - 1) % m


def moving_windows(x, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Times ``m+1..T-m`` and the centred length-(2m+1) windows around them."""
    x = as_series(x)
    N = 2 * m + 1
    if m < 1 or x.size < N:
        raise InvalidInputError(f"need m >= 1 and T >= 2m+1, got m={m}, T={x.size}")
    times = np.arange(m + 1, x.size - m + 1)
    return times, np.lib.stride_tricks.sliding_window_view(x, N)


def moving_periodogram(x, m: int, window=None) -> MovingPeriodogram:
    """Single-frequency periodogram in a window centred at each interior time."""
    times, wins = moving_windows(x, m)
    N = 2 * m + 1
    idx = moving_frequency_index(times, m)
    omega = TWO_PI * idx / N
    weights, norm = _window_parts(window, N)
    if weights is not None:
        wins = wins * weights
    s = np.arange(1, N + 1)
    J = np.sum(wins * np.exp(-1j * omega[:, None] * s), axis=1)
    return MovingPeriodogram(
        T=int(np.asarray(x).size), m=m, times=times, freq_index=idx,
        ordinates=np.abs(J) ** 2 / (TWO_PI * norm),
    )


def preperiodogram(x, t: int, omega: float) -> float:
    """Preperiodogram at time ``t``: the Fourier transform of local lag products."""
    x = np.asarray(x, dtype=float)
    T = x.size
    if not 1 <= t <= T:
        raise InvalidInputError(f"t={t} outside 1..{T}")
    k = np.arange(-2 * T, 2 * T + 1)
    a = np.floor(t + 0.5 + k / 2).astype(int)
    b = np.floor(t + 0.5 - k / 2).astype(int)
    ok = (a >= 1) & (a <= T) & (b >= 1) & (b <= T)
    val = np.sum(x[a[ok] - 1] * x[b[ok] - 1] * np.exp(-1j * omega * k[ok])) / TWO_PI
    assert abs(val.imag) <= 1e-10 * max(1.0, abs(val.real)), "preperiodogram is not real"
    return float(val.real)
