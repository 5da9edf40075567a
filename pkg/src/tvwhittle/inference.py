"""Gibbs sampling for tvAR paths: PGAS for the state path plus conjugate updates.

One sweep runs, in order: a PGAS update of ``theta_{1:n}``, an inverse-Wishart
draw of ``Q``, an inverse-gamma draw of the innovation variance (or of the
log-variance step variance under stochastic volatility), and a Gaussian
draw of the initial state ``theta_0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import invwishart

from .exceptions import DegeneratePosteriorError, DomainError, InvalidInputError
from .likelihood import LikelihoodSpec, PreparedData, prepare
from .modify import burg
from .pgas import ObservationModel, observation_model, pgas_sweep
from .spectral import QUANTILE_PROBS, TWO_PI, transfer_sq
from .tvar import r_to_theta, theta_to_phi

log = logging.getLogger(__name__)

SV_Q_MODES = ("joint", "separate")


def _spd(a, what):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1] or not np.allclose(a, a.T):
        raise InvalidInputError(f"{what} must be a symmetric matrix")
    if np.any(np.linalg.eigvalsh(a) <= 0):
        raise InvalidInputError(f"{what} must be positive definite")
    return a


@dataclass(frozen=True)
class Priors:
    """Conjugate priors of the state-space model.

    ``Q ~ IW(nu0, S0)``, ``sigma2 ~ IG(alpha, beta)``, ``theta_0 ~ N(a0, P0)``.
    ``zeta_alpha``/``zeta_beta`` give the inverse-gamma prior on the
    log-variance step variance when stochastic volatility uses a separate
    step variance (``sv_q="separate"``).
    """

    nu0: float
    S0: np.ndarray
    a0: np.ndarray
    P0: np.ndarray
    alpha: float = 0.01
    beta: float = 0.01
    zeta_alpha: float = 0.01
    zeta_beta: float = 0.01
    sv_q: str = "joint"

    def __post_init__(self):
        S0 = _spd(self.S0, "S0")
        P0 = _spd(self.P0, "P0")
        a0 = np.atleast_1d(np.asarray(self.a0, dtype=float))
        d = S0.shape[0]
        if self.sv_q not in SV_Q_MODES:
            raise InvalidInputError(f"sv_q must be one of {SV_Q_MODES}")
        if a0.size != P0.shape[0]:
            raise InvalidInputError("a0 and P0 have different dimensions")
        if not self.nu0 > d - 1:
            raise InvalidInputError(f"nu0 must exceed dim - 1 = {d - 1}")
        if min(self.alpha, self.beta, self.zeta_alpha, self.zeta_beta) <= 0:
            raise InvalidInputError("inverse-gamma hyperparameters must be positive")
        object.__setattr__(self, "S0", S0)
        object.__setattr__(self, "P0", P0)
        object.__setattr__(self, "a0", a0)

    @property
    def state_dim(self) -> int:
        return self.a0.size

    @classmethod
    def default(cls, spec: LikelihoodSpec, scale_by_step: bool = True, sv_q: str = "joint") -> "Priors":
        """Defaults: ``Q ~ IW(10, 0.005 (10 - d - 1) I_d)``, ``IG(0.01, 0.01)``, ``N(0, 10 I)``.

        ``d`` is the dimension of the random walk governed by ``Q``. For the
        block family the IW scale is multiplied by the step size S.
        """
        d = spec.state_dim
        dq = spec.order if (spec.sv and sv_q == "separate") else d
        scale = 0.005 * (10 - dq - 1)
        if spec.family == "block" and scale_by_step:
            scale *= spec.S
        return cls(nu0=10.0, S0=scale * np.eye(dq), a0=np.zeros(d), P0=10.0 * np.eye(d), sv_q=sv_q)

    def to_dict(self) -> dict:
        return {
            "Q_prior": {"dof": self.nu0, "scale": self.S0.tolist()},
            "sigma2_prior": {"shape": self.alpha, "scale": self.beta},
            "init_prior": {"mean": self.a0.tolist(), "cov": self.P0.tolist()},
            "sv_zeta_prior": {"shape": self.zeta_alpha, "scale": self.zeta_beta},
            "sv_q": self.sv_q,
        }


@dataclass(frozen=True)
class GibbsConfig:
    n_iter: int = 12000
    burn_in: int = 2000
    thin: int = 2
    n_particles: int = 100
    seed: int = 0

    def __post_init__(self):
        if not (self.n_iter > self.burn_in >= 0):
            raise InvalidInputError("need n_iter > burn_in >= 0")
        if self.thin < 1:
            raise InvalidInputError("thin must be >= 1")
        if self.n_particles < 2:
            raise InvalidInputError("n_particles must be >= 2")

    @property
    def n_kept(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin


@dataclass
class GibbsState:
    """Current values of every block of the Gibbs sampler."""

    theta: np.ndarray  # (n_states, d)
    theta0: np.ndarray  # (d,)
    Q: np.ndarray  # (d, d), the full random-walk covariance
    sigma2: float  # innovation variance; unused under SV
    sigma2_zeta: float = np.nan  # log-variance step variance in the separate SV mode


@dataclass(frozen=True)
class PosteriorDraws:
    """Kept draws of one Gibbs run.

    ``theta`` has shape ``(n_draws, n_states, d)``; the first ``p`` state
    coordinates map to AR coefficients and, with SV, the last is the log
    innovation variance.
    """

    spec: LikelihoodSpec
    T: int
    state_times: np.ndarray
    theta: np.ndarray
    theta0: np.ndarray
    Q: np.ndarray
    sigma2: np.ndarray
    sigma2_zeta: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.theta.shape[0]

    @property
    def phi(self) -> np.ndarray:
        """AR coefficient draws per state, ``(n_draws, n_states, p)``."""
        return theta_to_phi(self.theta[..., : self.spec.order])

    @property
    def log_sigma2(self) -> np.ndarray:
        """Log innovation variance per draw and state."""
        if self.spec.sv:
            return self.theta[..., self.spec.order]
        return np.broadcast_to(np.log(self.sigma2)[:, None], self.theta.shape[:2])

    def phi_quantiles(self, probs=QUANTILE_PROBS, interpolate: bool = True) -> np.ndarray:
        """Quantiles of phi, ``(len(probs), T or n_states, p)``."""
        q = posterior_quantiles(self.phi, probs)
        return interpolate_path(q.swapaxes(0, 1), self.state_times, self.T).swapaxes(0, 1) if interpolate else q

    def log_sigma2_quantiles(self, probs=QUANTILE_PROBS, interpolate: bool = True) -> np.ndarray:
        q = posterior_quantiles(self.log_sigma2, probs)
        return interpolate_path(q.T, self.state_times, self.T).T if interpolate else q


def update_Q(theta, theta0, priors: Priors, rng) -> np.ndarray:
    """Draw ``Q ~ IW(n + nu0, S0 + sum_j dtheta_j dtheta_j')`` with ``dtheta_1 = theta_1 - theta_0``."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if theta.shape[0] < 1:
        raise InvalidInputError("path needs at least one state")
    steps = np.diff(np.vstack([np.asarray(theta0, dtype=float)[None, :], theta]), axis=0)
    scale = priors.S0 + steps.T @ steps
    try:
        np.linalg.cholesky(scale)
    except np.linalg.LinAlgError as exc:
        raise DegeneratePosteriorError("inverse-Wishart scale is not positive definite") from exc
    draw = invwishart.rvs(df=theta.shape[0] + priors.nu0, scale=scale, random_state=rng)
    return np.atleast_2d(draw)


def _inverse_gamma(shape, scale, rng) -> float:
    if not (np.isfinite(scale) and scale > 0):
        raise DegeneratePosteriorError(
            f"inverse-gamma scale {scale} is not positive; the modified periodogram "
            "has too much negative mass for a conjugate variance update"
        )
    return float(scale / rng.gamma(shape))


def whitened_ordinates(data: PreparedData, phi) -> np.ndarray:
    """``2 pi |phi_j(e^{-i w})|^2 I(w, t_j)`` for every state and frequency."""
    phi = np.asarray(phi, dtype=float)
    tilde = TWO_PI * transfer_sq(phi[:, None, :], data.omegas) * data.ordinates
    if not np.all(np.isfinite(tilde)):
        raise DomainError("non-finite whitened periodogram")
    return tilde


def sigma2_statistics(data: PreparedData, phi) -> tuple[float, float]:
    """Sufficient statistics ``(count, sum)`` of the innovation-variance conditional."""
    if data.is_spectral:
        return float(data.n_obs), float(np.sum(whitened_ordinates(data, phi)))
    p = data.spec.order
    y, lags = data.lagged()
    resid = (y - np.sum(phi * lags, axis=1))[p:]
    return 0.5 * resid.size, 0.5 * float(resid @ resid)


def update_sigma2(data: PreparedData, phi, priors: Priors, rng) -> float:
    """Draw the innovation variance from its inverse-gamma full conditional.

    Spectral families use ``IG(alpha + n_obs, beta + sum 2 pi |phi(e^{-iw})|^2 I)``;
    the time-domain model uses ``IG(alpha + n/2, beta + RSS/2)``.
    """
    count, total = sigma2_statistics(data, phi)
    return _inverse_gamma(priors.alpha + count, priors.beta + total, rng)


def update_sigma2_zeta(h, h0, priors: Priors, rng) -> float:
    steps = np.diff(np.concatenate([[h0], np.asarray(h, dtype=float)]))
    return _inverse_gamma(priors.zeta_alpha + 0.5 * steps.size, priors.zeta_beta + 0.5 * steps @ steps, rng)


def initial_state_moments(theta1, Q, priors: Priors) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of ``theta_0`` given ``theta_1``: precision-weighted average."""
    Q_inv = np.linalg.inv(np.atleast_2d(Q))
    P_inv = np.linalg.inv(priors.P0)
    omega = np.linalg.inv(Q_inv + P_inv)
    mean = omega @ (Q_inv @ np.asarray(theta1, dtype=float) + P_inv @ priors.a0)
    return mean, 0.5 * (omega + omega.T)


def update_initial_state(theta1, Q, priors: Priors, rng) -> np.ndarray:
    try:
        mean, cov = initial_state_moments(theta1, Q, priors)
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DegeneratePosteriorError("initial-state precision is singular") from exc
    return mean + chol @ rng.standard_normal(mean.size)


def pgas_update(data: PreparedData, current_path, Q, sigma2, n_particles: int, rng, theta0=None,
                model: ObservationModel | None = None) -> np.ndarray:
    """One PGAS sweep over the state path given ``Q``, ``sigma2`` and ``theta_0``."""
    model = observation_model(data) if model is None else model
    current_path = np.asarray(current_path, dtype=float)
    theta0 = current_path[0] if theta0 is None else theta0
    return pgas_sweep(model, current_path, theta0, Q, sigma2, n_particles, rng)


def gibbs_sweep(data: PreparedData, state: GibbsState, priors: Priors, n_particles: int, rng,
                model: ObservationModel | None = None) -> GibbsState:
    """One full sweep: path, Q, variance, initial state."""
    spec = data.spec
    p = spec.order
    model = observation_model(data) if model is None else model
    theta = pgas_sweep(model, state.theta, state.theta0, state.Q, state.sigma2, n_particles, rng)
    sigma2, zeta = state.sigma2, state.sigma2_zeta
    if spec.sv and priors.sv_q == "separate":
        Qp = update_Q(theta[:, :p], state.theta0[:p], priors, rng)
        zeta = update_sigma2_zeta(theta[:, p], state.theta0[p], priors, rng)
        Q = np.zeros((p + 1, p + 1))
        Q[:p, :p] = Qp
        Q[p, p] = zeta
    else:
        Q = update_Q(theta, state.theta0, priors, rng)
    if not spec.sv:
        sigma2 = update_sigma2(data, theta_to_phi(theta), priors, rng)
    theta0 = update_initial_state(theta[0], Q, priors, rng)
    return GibbsState(theta, theta0, Q, sigma2, zeta)


def initial_state(data: PreparedData, priors: Priors) -> GibbsState:
    """Start every state at the Burg AR(p) fit of the whole series."""
    spec = data.spec
    p = spec.order
    r, s2 = burg(data.x - data.x.mean(), p)
    theta_ar = r_to_theta(np.clip(r, -0.99, 0.99))
    sigma2 = float(max(s2[p], 1e-12))
    start = np.concatenate([theta_ar, [np.log(sigma2)]]) if spec.sv else theta_ar
    theta = np.tile(start, (data.n_states, 1))
    dq = priors.S0.shape[0]
    Q = np.diag(np.full(spec.state_dim, 0.0))
    Q[:dq, :dq] = priors.S0 / max(priors.nu0 - dq - 1, 1.0)
    zeta = np.nan
    if dq < spec.state_dim:
        zeta = priors.zeta_beta / max(priors.zeta_alpha - 1, 1.0) if priors.zeta_alpha > 1 else 0.01
        Q[p, p] = zeta
    return GibbsState(theta, start.copy(), Q, sigma2, zeta)


def chain_rng(seed: int, *stream):
    """Independent, reproducible generator for ``seed`` and an optional stream key."""
    return np.random.default_rng([int(seed), *[int(s) for s in stream]])


def gibbs_run(x, spec: LikelihoodSpec, priors: Priors | None = None, config: GibbsConfig | None = None,
              rng=None, data: PreparedData | None = None, callback=None) -> PosteriorDraws:
    """Run the Gibbs sampler and keep ``(n_iter - burn_in) // thin`` draws.

    ``rng`` defaults to a generator seeded with ``config.seed``. A prepared
    ``data`` object may be passed to skip :func:`~tvwhittle.likelihood.prepare`.
    """
    config = GibbsConfig() if config is None else config
    priors = Priors.default(spec) if priors is None else priors
    if priors.state_dim != spec.state_dim:
        raise InvalidInputError(f"priors have dimension {priors.state_dim}, model needs {spec.state_dim}")
    rng = chain_rng(config.seed) if rng is None else rng
    data = prepare(x, spec) if data is None else data
    model = observation_model(data)
    state = initial_state(data, priors)

    n_keep = config.n_kept
    n, d = state.theta.shape
    theta = np.empty((n_keep, n, d))
    theta0 = np.empty((n_keep, d))
    Qs = np.empty((n_keep, d, d))
    sig = np.full(n_keep, np.nan)
    zeta = np.full(n_keep, np.nan)
    moved = np.empty(config.n_iter)
    k = 0
    for it in range(1, config.n_iter + 1):
        new = gibbs_sweep(data, state, priors, config.n_particles, rng, model)
        moved[it - 1] = np.mean(np.any(new.theta != state.theta, axis=1))
        state = new
        if it > config.burn_in and (it - config.burn_in) % config.thin == 0 and k < n_keep:
            theta[k], theta0[k], Qs[k] = state.theta, state.theta0, state.Q
            sig[k] = np.nan if spec.sv else state.sigma2
            zeta[k] = state.sigma2_zeta
            k += 1
        if callback is not None:
            callback(it, state)
        if it % 1000 == 0:
            log.debug("%s: sweep %d/%d, path update rate %.3f", spec.label, it, config.n_iter, moved[:it].mean())
    diagnostics = {
        "path_update_rate": float(moved[config.burn_in:].mean()),
        "path_update_rate_burn_in": float(moved[: config.burn_in].mean()) if config.burn_in else float("nan"),
        "n_iter": config.n_iter,
        "n_particles": config.n_particles,
    }
    draws = PosteriorDraws(spec, data.T, data.state_times, theta, theta0, Qs, sig, zeta, diagnostics)
    return draws


def interpolate_path(values, state_times, T: int) -> np.ndarray:
    """Piecewise-constant extension of per-state values to times ``1..T``.

    Time t takes the value of the last state at or before t; times before
    the first state take the first value.
    """
    values = np.asarray(values)
    state_times = np.asarray(state_times)
    if values.shape[0] == 0 or state_times.size == 0:
        raise InvalidInputError("cannot interpolate an empty path")
    if values.shape[0] != state_times.size:
        raise InvalidInputError("one value per state time is required")
    idx = np.searchsorted(state_times, np.arange(1, T + 1), side="right") - 1
    return values[np.clip(idx, 0, None)]


def posterior_quantiles(draws, probs=QUANTILE_PROBS) -> np.ndarray:
    """Quantiles over the first axis by linear interpolation of order statistics."""
    draws = np.asarray(draws, dtype=float)
    if draws.shape[0] < 2:
        raise InvalidInputError("need at least two draws for quantiles")
    return np.quantile(draws, np.asarray(probs, dtype=float), axis=0, method="linear")


