"""Log-likelihoods for tvAR inference and the one-off data preparation behind them.

Every spectral likelihood here is the log-density of independent
exponential ordinates with means given by the local AR spectral density.
Filters, tapers and predictive DFTs are applied once in :func:`prepare`;
the likelihood evaluations only touch the frozen ordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, InvalidInputError
from .localper import (
    BlockPeriodogram,
    MovingPeriodogram,
    block_periodogram,
    moving_frequency_index,
    moving_periodogram,
    moving_windows,
    segment_geometry,
    segments,
)
from .modify import Modification, apply_modification, hanning_window
from .spectral import TWO_PI, Periodogram, ar_sdf, as_series, fourier_frequencies

FAMILIES = ("time_domain", "whittle", "block", "dynamic")


@dataclass(frozen=True)
class LikelihoodSpec:
    """Likelihood family, its geometry, the periodogram modification and model order.

    ``N``/``S`` are required for ``block`` and ``m`` for ``dynamic``.
    ``sv`` adds a random-walk log-variance state.
    """

    family: str
    order: int = 2
    N: int | None = None
    S: int | None = None
    m: int | None = None
    modification: Modification = field(default_factory=Modification)
    sv: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.order < 1:
            raise InvalidInputError("model order must be >= 1")
        needs_block = self.family == "block"
        if needs_block != (self.N is not None and self.S is not None):
            raise InvalidInputError("N and S must be given exactly for the block family")
        if (self.family == "dynamic") != (self.m is not None):
            raise InvalidInputError("m must be given exactly for the dynamic family")
        if self.family == "time_domain" and self.modification.kind != "none":
            raise InvalidInputError("periodogram modifications do not apply to the time-domain likelihood")

    @property
    def state_dim(self) -> int:
        return self.order + (1 if self.sv else 0)

    @property
    def step(self) -> int:
        """Time steps between consecutive latent states."""
        return self.S if self.family == "block" else 1

    @property
    def label(self) -> str:
        if self.family == "time_domain":
            base = "TD"
        elif self.family == "whittle":
            base = "W"
        elif self.family == "block":
            base = f"BW-N{self.N}-S{self.S}"
        else:
            base = f"DW-m{self.m}"
        mod = self.modification.label
        base = base if mod == "raw" or self.family == "time_domain" else f"{base}-{mod}"
        return base + ("-SV" if self.sv else "")


@dataclass(frozen=True)
class PreparedData:
    """Frozen inputs of one likelihood: the series and, for spectral families,
    the ordinates attached to each latent state.

    ``state_times`` are the (1-based) times the latent states refer to.
    For spectral families ``omegas`` and ``ordinates`` have shape
    ``(n_states, K)``.
    """

    spec: LikelihoodSpec
    x: np.ndarray
    state_times: np.ndarray
    periodogram: Periodogram | BlockPeriodogram | MovingPeriodogram | None = None
    omegas: np.ndarray | None = None
    ordinates: np.ndarray | None = None

    @property
    def T(self) -> int:
        return self.x.size

    @property
    def n_states(self) -> int:
        return self.state_times.size

    @property
    def n_obs(self) -> int:
        """Number of scalar observations entering the likelihood."""
        if self.spec.family == "time_domain":
            return self.T - self.spec.order
        return int(self.ordinates.size)

    @property
    def is_spectral(self) -> bool:
        return self.spec.family != "time_domain"

    def lagged(self) -> tuple[np.ndarray, np.ndarray]:
        """Regression design of the time-domain model: ``x_t`` and ``(x_{t-1},..,x_{t-p})``.

        Rows for ``t <= p`` are zero-filled and carry no likelihood.
        """
        p = self.spec.order
        lags = np.zeros((self.T, p))
        for j in range(1, p + 1):
            lags[j:, j - 1] = self.x[:-j]
        return self.x, lags

    def with_ordinates(self, ordinates) -> "PreparedData":
        """Same geometry with replacement ordinates (used by simulation-based checks)."""
        ordinates = np.asarray(ordinates, dtype=float)
        if self.ordinates is None or ordinates.shape != self.ordinates.shape:
            raise InvalidInputError("replacement ordinates must match the prepared shape")
        return PreparedData(self.spec, self.x, self.state_times, None, self.omegas, ordinates)


def _modified_block(x, geometry, mod: Modification) -> BlockPeriodogram:
    if mod.kind == "none":
        return block_periodogram(x, geometry)
    if mod.kind == "taper":
        return block_periodogram(x, geometry, hanning_window(geometry.N))
    grid = fourier_frequencies(geometry.N)
    ords = np.array([apply_modification(mod, seg, grid) for seg in segments(x, geometry)])
    return BlockPeriodogram(geometry, grid, ords)


def _modified_moving(x, m, mod: Modification) -> MovingPeriodogram:
    if mod.kind == "none":
        return moving_periodogram(x, m)
    if mod.kind == "taper":
        return moving_periodogram(x, m, hanning_window(2 * m + 1))
    times, wins = moving_windows(x, m)
    idx = moving_frequency_index(times, m)
    omega = TWO_PI * idx / (2 * m + 1)
    ords = np.array([apply_modification(mod, w, [om])[0] for w, om in zip(wins, omega)])
    return MovingPeriodogram(T=x.size, m=m, times=times, freq_index=idx, ordinates=ords)


def prepare(x, spec: LikelihoodSpec) -> PreparedData:
    """Compute and freeze everything the likelihood needs from the data."""
    data = _prepare(as_series(x), spec)
    if data.ordinates is not None and spec.modification.clip_negative:
        return PreparedData(spec, data.x, data.state_times, data.periodogram, data.omegas,
                            np.maximum(data.ordinates, 0.0))
    return data


def _prepare(x, spec: LikelihoodSpec) -> PreparedData:
    fam = spec.family
    if fam == "time_domain":
        if x.size <= spec.order:
            raise InvalidInputError("series shorter than the model order")
        return PreparedData(spec, x, np.arange(1, x.size + 1))
    if fam == "whittle":
        grid = fourier_frequencies(x.size)
        ords = apply_modification(spec.modification, x, grid)
        pg = Periodogram(grid, ords)
        return PreparedData(
            spec, x, np.array([(x.size + 1) // 2]), pg, grid.frequencies[None, :], ords[None, :]
        )
    if fam == "block":
        geom = segment_geometry(x.size, spec.N, spec.S)
        bp = _modified_block(x, geom, spec.modification)
        om = np.broadcast_to(bp.frequencies, bp.ordinates.shape).copy()
        return PreparedData(spec, x, geom.centers, bp, om, bp.ordinates)
    mp = _modified_moving(x, spec.m, spec.modification)
    return PreparedData(spec, x, mp.times, mp, mp.frequencies[:, None], mp.ordinates[:, None])


def _check_path(phi, n, what):
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2 or phi.shape[0] != n:
        raise InvalidInputError(f"{what} path needs {n} rows of AR coefficients, got shape {phi.shape}")
    p = phi.shape[1]
    if p:
        companion = np.zeros((n, p, p))
        companion[:, 0, :] = phi
        companion[:, 1:, :-1] = np.eye(p - 1)
        bad = np.flatnonzero(np.max(np.abs(np.linalg.eigvals(companion)), axis=1) >= 1.0)
        if bad.size:
            raise DomainError(f"AR coefficients of {what} row {bad[0]} are not stable")
    return phi


def _variances(sigma2, n):
    s = np.broadcast_to(np.asarray(sigma2, dtype=float), (n,))
    if np.any(~(s > 0)):
        raise DomainError("innovation variances must be positive")
    return s


def exponential_loglik(omegas, ordinates, phi, sigma2) -> float:
    """``-sum [log f + I/f]`` with ``f`` the AR spectral density of each row's parameters."""
    n = ordinates.shape[0]
    phi = _check_path(phi, n, "state")
    s = _variances(sigma2, n)
    f = ar_sdf(phi[:, None, :], s[:, None], omegas)
    return -float(np.sum(np.log(f) + ordinates / f))


def block_whittle_loglik(data: BlockPeriodogram, phi, sigma2) -> float:
    """Block Whittle log-likelihood over all segments and segment frequencies."""
    om = np.broadcast_to(data.frequencies, data.ordinates.shape)
    return exponential_loglik(om, data.ordinates, phi, sigma2)


def dynamic_whittle_loglik(data: MovingPeriodogram, phi, sigma2) -> float:
    """Dynamic Whittle log-likelihood; one ordinate per interior time point."""
    return exponential_loglik(data.frequencies[:, None], data.ordinates[:, None], phi, sigma2)


def time_domain_tvar_loglik(x, phi, sigma2, p: int | None = None) -> float:
    """Gaussian tvAR log-likelihood conditional on the first ``p`` observations."""
    x = as_series(x)
    phi = _check_path(phi, x.size, "time-domain")
    p = phi.shape[1] if p is None else p
    s = _variances(sigma2, x.size)
    mean = np.zeros(x.size)
    for j in range(1, p + 1):
        mean[j:] += phi[j:, j - 1] * x[:-j]
    resid = (x - mean)[p:]
    var = s[p:]
    return float(np.sum(-0.5 * np.log(TWO_PI * var) - 0.5 * resid**2 / var))


def loglik(data: PreparedData, phi, sigma2) -> float:
    """Log-likelihood of per-state AR coefficients and variances under ``data``."""
    if data.spec.family == "time_domain":
        return time_domain_tvar_loglik(data.x, phi, sigma2, data.spec.order)
    return exponential_loglik(data.omegas, data.ordinates, phi, sigma2)
