"""Time-varying AR models: stability map, simulation and the benchmark paths.

The composite map ``theta -> r -> phi`` sends any real vector to a stable
AR coefficient vector: each ``theta_k`` is squashed into a partial
autocorrelation ``r_k = theta_k / sqrt(1 + theta_k^2)`` and the
Durbin-Levinson recursion turns the partial autocorrelations into
coefficients. All functions accept leading batch dimensions ``(..., p)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InvalidInputError
from .spectral import is_stable


_R_MAX = np.nextafter(1.0, 0.0)


def theta_to_r(theta) -> np.ndarray:
    """Monahan map; values that round to +-1 are pulled back inside the open interval."""
    theta = np.asarray(theta, dtype=float)
    return np.clip(theta / np.sqrt(1.0 + theta * theta), -_R_MAX, _R_MAX)


def r_to_theta(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(np.abs(r) >= 1.0):
        raise DomainError("partial autocorrelations must lie in (-1, 1)")
    return r / np.sqrt(1.0 - r * r)


def r_to_phi(r) -> np.ndarray:
    """Durbin-Levinson map from partial autocorrelations to AR coefficients.

    ``phi_{k,k} = r_k`` and ``phi_{k,j} = phi_{k-1,j} - r_k phi_{k-1,k-j}``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(np.abs(r) >= 1.0):
        raise DomainError("partial autocorrelations must lie in (-1, 1)")
    p = r.shape[-1]
    phi = np.zeros_like(r)
    for k in range(p):
        rk = r[..., k : k + 1]
        prev = phi[..., :k].copy()
        phi[..., :k] = prev - rk * prev[..., ::-1]
        phi[..., k] = r[..., k]
    return phi


def phi_to_r(phi) -> np.ndarray:
    """Inverse of :func:`r_to_phi`; raises when ``phi`` is not stable."""
    phi = np.array(phi, dtype=float)
    p = phi.shape[-1]
    r = np.zeros_like(phi)
    for k in range(p - 1, -1, -1):
        rk = phi[..., k]
        if np.any(np.abs(rk) >= 1.0):
            raise DomainError("AR coefficients are outside the stability region")
        r[..., k] = rk
        prev = phi[..., :k]
        phi[..., :k] = (prev + rk[..., None] * prev[..., ::-1]) / (1.0 - rk[..., None] ** 2)
    return r


def theta_to_phi(theta) -> np.ndarray:
    """The composite stability map g."""
    return r_to_phi(theta_to_r(theta))


def phi_to_theta(phi) -> np.ndarray:
    return r_to_theta(phi_to_r(phi))


@dataclass(frozen=True)
class TvarPath:
    """Per-time AR coefficients and innovation variances for ``t = 1..T``.

    ``theta`` holds the unrestricted parameters when the path was built
    through the stability map; ``log_sigma2`` is set for stochastic
    volatility paths.
    """

    phi: np.ndarray
    sigma2: np.ndarray
    theta: np.ndarray | None = None
    log_sigma2: np.ndarray | None = None

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 2:
            raise InvalidInputError("phi path must have shape (T, p)")
        sigma2 = np.broadcast_to(np.asarray(self.sigma2, dtype=float), phi.shape[:1]).copy()
        if np.any(~(sigma2 > 0)):
            raise DomainError("innovation variances must be positive")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def T(self) -> int:
        return self.phi.shape[0]

    @property
    def p(self) -> int:
        return self.phi.shape[1]

    @classmethod
    def from_theta(cls, theta, sigma2=1.0, log_sigma2=None) -> "TvarPath":
        theta = np.asarray(theta, dtype=float)
        return cls(phi=theta_to_phi(theta), sigma2=sigma2, theta=theta, log_sigma2=log_sigma2)

    def with_stochastic_volatility(self, log_sigma2) -> "TvarPath":
        log_sigma2 = np.asarray(log_sigma2, dtype=float)
        return TvarPath(self.phi, np.exp(log_sigma2), self.theta, log_sigma2)


def simulate_log_variance(T: int, log_sigma2_0: float, sigma2_zeta: float, rng) -> np.ndarray:
    """Random-walk log-variance ``h_t = h_{t-1} + zeta_t`` started from ``h_0``."""
    steps = rng.normal(0.0, np.sqrt(sigma2_zeta), size=T)
    return log_sigma2_0 + np.cumsum(steps)


def simulate_tvar(path: TvarPath, rng, burn_in: int = 200) -> np.ndarray:
    """Simulate ``x_t = sum_j phi_{jt} x_{t-j} + eps_t`` with ``eps_t ~ N(0, sigma2_t)``.

    ``burn_in`` steps are run at the t=1 parameters from a zero start and
    then discarded.
    """
    if burn_in < 0:
        raise InvalidInputError("burn_in must be non-negative")
    phi = path.phi
    for t in range(path.T):
        if not is_stable(phi[t]):
            raise DomainError(f"AR coefficients at t={t + 1} are not stable")
    T, p = phi.shape
    phi_all = np.concatenate([np.repeat(phi[:1], burn_in, axis=0), phi])
    sd_all = np.sqrt(np.concatenate([np.repeat(path.sigma2[:1], burn_in), path.sigma2]))
    eps = rng.standard_normal(burn_in + T) * sd_all
    x = np.zeros(p + burn_in + T)
    for t in range(burn_in + T):
        s = p + t
        x[s] = phi_all[t] @ x[s - p : s][::-1] + eps[t] if p else eps[t]
    return x[p + burn_in :]


def dgp_experiment1(T: int) -> TvarPath:
    """Cosine-driven tvAR(2): ``phi_1 = -1.8 cos(1.5 - cos(4 pi u))``, ``phi_2 = -0.9``."""
    if T < 2:
        raise InvalidInputError("T must be >= 2")
    u = np.arange(T) / (T - 1)
    phi = np.column_stack([-1.8 * np.cos(1.5 - np.cos(4.0 * np.pi * u)), np.full(T, -0.9)])
    return TvarPath(phi=phi, sigma2=1.0)


def dgp_experiment2(T: int) -> TvarPath:
    """Time-invariant AR(3) with coefficients (1.4, -0.7, 0.2)."""
    if T < 2:
        raise InvalidInputError("T must be >= 2")
    phi = np.tile([1.4, -0.7, 0.2], (T, 1))
    return TvarPath(phi=phi, sigma2=1.0, theta=phi_to_theta(phi))


def experiment3_theta(t) -> np.ndarray:
    """Three-piece linear paths of the unrestricted parameters, t in 1..1500."""
    t = np.asarray(t, dtype=float)
    first = t <= 500
    second = (t > 500) & (t <= 1000)
    th1 = np.where(
        first, 1.5 - 4 * (t - 1) / 500,
        np.where(second, -2.5 + 4.5 * (t - 501) / 500, 2 - 4 * (t - 1001) / 500),
    )
    th2 = np.where(
        first, 1 - 2 * (t - 1) / 500,
        np.where(second, -1 + (t - 501) / 500, -0.5 * (t - 1001) / 500),
    )
    return np.column_stack([th1, th2])


def dgp_experiment3(T: int = 1500, rescale: bool = False) -> TvarPath:
    """Near-unit-root tvAR(2) defined on 1500 points.

    Other lengths are refused unless ``rescale`` is set, in which case the
    1500-point formulas are evaluated at proportionally stretched times.
    """
    if T != 1500 and not rescale:
        raise InvalidInputError("experiment 3 is defined for T=1500; pass rescale=True otherwise")
    t = np.arange(1, T + 1, dtype=float)
    if T != 1500:
        t = 1.0 + (t - 1.0) * 1500.0 / T
    return TvarPath.from_theta(experiment3_theta(t), sigma2=1.0)


DGPS = {1: dgp_experiment1, 2: dgp_experiment2, 3: dgp_experiment3}
