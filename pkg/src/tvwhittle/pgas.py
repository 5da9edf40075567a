"""Particle Gibbs with ancestor sampling for random-walk parameter paths.

The latent state ``theta_j`` follows ``theta_j = theta_{j-1} + eta_j``,
``eta_j ~ N(0, Q)``. The first ``p`` coordinates are mapped to stable AR
coefficients; with stochastic volatility the last coordinate is the log
innovation variance. Proposals are bootstrap (the transition itself),
resampling is systematic at every step, and the reference trajectory sits
in the last particle slot. Plain systematic resampling around a fixed
reference does not leave the conditional posterior invariant, so the
stratified points are drawn conditionally on one of them falling in the
interval of the reference's (ancestor-sampled) parent.

The sweep runs inside a numba kernel. All randomness is drawn beforehand
from a numpy ``Generator`` so a seed fixes the output bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .exceptions import InvalidInputError, NumericalCollapseError

SPECTRAL, TIME_DOMAIN, LINEAR_GAUSSIAN = 0, 1, 2
_LOG_2PI = float(np.log(2.0 * np.pi))
_R_MAX = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class ObservationModel:
    """Flat arrays describing the observation density of every latent state.

    Only the arrays relevant to ``kind`` carry data; the others are empty
    placeholders so the compiled kernel sees one fixed signature.
    """

    kind: int
    order: int
    sv: bool
    n_states: int
    cos_tab: np.ndarray
    sin_tab: np.ndarray
    scaled_I: np.ndarray
    y: np.ndarray
    design: np.ndarray
    first_active: int = 0
    obs_var: float = 1.0


def _empty(ndim):
    return np.zeros((0,) * ndim)


def observation_model(data) -> ObservationModel:
    """Observation arrays for a :class:`~tvwhittle.likelihood.PreparedData`."""
    spec = data.spec
    p = spec.order
    if data.is_spectral:
        lags = np.arange(1, p + 1)
        angle = data.omegas[..., None] * lags
        return ObservationModel(
            SPECTRAL, p, spec.sv, data.n_states,
            np.ascontiguousarray(np.cos(angle)), np.ascontiguousarray(np.sin(angle)),
            np.ascontiguousarray(2.0 * np.pi * data.ordinates), _empty(1), _empty(2),
        )
    y, design = data.lagged()
    return ObservationModel(
        TIME_DOMAIN, p, spec.sv, data.n_states, _empty(3), _empty(3), _empty(2),
        np.ascontiguousarray(y), np.ascontiguousarray(design), first_active=p,
    )


def linear_gaussian_model(y, loading, obs_var: float) -> ObservationModel:
    """Surrogate ``y_j ~ N(loading . theta_j, obs_var)`` for validating the sampler
    against exact Kalman smoothing."""
    y = np.asarray(y, dtype=float)
    loading = np.atleast_1d(np.asarray(loading, dtype=float))
    if not obs_var > 0:
        raise InvalidInputError("observation variance must be positive")
    return ObservationModel(
        LINEAR_GAUSSIAN, 0, False, y.size, _empty(3), _empty(3), _empty(2),
        y, loading[None, :], obs_var=float(obs_var),
    )


@njit(cache=True)
def _levinson(theta, p, phi, tmp):
    for k in range(p):
        rk = min(max(theta[k] / np.sqrt(1.0 + theta[k] * theta[k]), -_R_MAX), _R_MAX)
        for j in range(k):
            tmp[j] = phi[j]
        for j in range(k):
            phi[j] = tmp[j] - rk * tmp[k - 1 - j]
        phi[k] = rk


@njit(cache=True)
def _log_weights(kind, states, j, p, sv, sigma2, cos_tab, sin_tab, scaled_I,
                 y, design, first_active, obs_var, out):
    n_part, d = states.shape
    phi = np.empty(max(p, 1))
    tmp = np.empty(max(p, 1))
    for i in range(n_part):
        if kind == 2:
            mu = 0.0
            for l in range(d):
                mu += design[0, l] * states[i, l]
            r = y[j] - mu
            out[i] = -0.5 * (_LOG_2PI + np.log(obs_var)) - 0.5 * r * r / obs_var
            continue
        _levinson(states[i], p, phi, tmp)
        # multiply by the precision so an underflowing variance gives -inf, not a division error
        if sv:
            log_s2 = states[i, p]
        else:
            log_s2 = np.log(sigma2)
        prec = np.exp(-log_s2)
        if kind == 0:
            acc = 0.0
            for k in range(scaled_I.shape[1]):
                re = 1.0
                im = 0.0
                for l in range(p):
                    re -= phi[l] * cos_tab[j, k, l]
                    im += phi[l] * sin_tab[j, k, l]
                a2 = re * re + im * im
                acc += np.log(a2) - log_s2 + _LOG_2PI - scaled_I[j, k] * a2 * prec
            out[i] = acc
        else:
            if j < first_active:
                out[i] = 0.0
                continue
            mu = 0.0
            for l in range(p):
                mu += phi[l] * design[j, l]
            r = y[j] - mu
            out[i] = -0.5 * (_LOG_2PI + log_s2) - 0.5 * r * r * prec


@njit(cache=True)
def _normalise(logw, w):
    top = -np.inf
    for i in range(logw.size):
        if logw[i] > top:
            top = logw[i]
    if not np.isfinite(top):
        return -1.0
    total = 0.0
    for i in range(logw.size):
        w[i] = np.exp(logw[i] - top)
        total += w[i]
    return total


@njit(cache=True)
def _pick(w, total, u):
    target = u * total
    acc = 0.0
    for i in range(w.size):
        acc += w[i]
        if acc > target:
            return i
    return w.size - 1


@njit(cache=True)
def _csmc_as(kind, ref, theta0, chol, q_inv, sigma2, p, sv, cos_tab, sin_tab, scaled_I,
             y, design, first_active, obs_var, eps, u_res, u_as, u_fin):
    n, d = ref.shape
    n_free = eps.shape[1]
    n_part = n_free + 1
    X = np.empty((n, n_part, d))
    A = np.empty((n, n_part), dtype=np.int64)
    logw = np.empty(n_part)
    w = np.empty(n_part)
    las = np.empty(n_part)
    diff = np.empty(d)
    path = np.empty((n, d))

    for i in range(n_free):
        for a in range(d):
            acc = theta0[a]
            for b in range(a + 1):
                acc += chol[a, b] * eps[0, i, b]
            X[0, i, a] = acc
    X[0, n_free] = ref[0]
    _log_weights(kind, X[0], 0, p, sv, sigma2, cos_tab, sin_tab, scaled_I,
                 y, design, first_active, obs_var, logw)

    for t in range(1, n):
        if _normalise(logw, w) <= 0.0:
            return path, t - 1
        # ancestor of the reference trajectory
        for i in range(n_part):
            for a in range(d):
                diff[a] = ref[t, a] - X[t - 1, i, a]
            quad = 0.0
            for a in range(d):
                for b in range(d):
                    quad += diff[a] * q_inv[a, b] * diff[b]
            las[i] = logw[i] - 0.5 * quad
        total = _normalise(las, w)
        if total <= 0.0:
            return path, t
        ref_anc = _pick(w, total, u_as[t])
        A[t, n_free] = ref_anc
        total = _normalise(logw, w)
        # conditional systematic resampling: one of the n_part stratified points
        # is forced into the reference ancestor's interval, the others go to the free particles
        lo = 0.0
        for i in range(ref_anc):
            lo += w[i]
        v = n_part * (lo + u_res[t] * w[ref_anc]) / total
        slot = min(int(v), n_part - 1)
        u = min(max(v - slot, 0.0), 1.0)
        idx = 0
        cum = w[0] / total
        i = 0
        for s in range(n_part):
            if s == slot:
                continue
            pos = (u + s) / n_part
            while pos > cum and idx < n_part - 1:
                idx += 1
                cum += w[idx] / total
            A[t, i] = idx
            i += 1
        for i in range(n_free):
            anc = A[t, i]
            for a in range(d):
                acc = X[t - 1, anc, a]
                for b in range(a + 1):
                    acc += chol[a, b] * eps[t, i, b]
                X[t, i, a] = acc
        X[t, n_free] = ref[t]
        _log_weights(kind, X[t], t, p, sv, sigma2, cos_tab, sin_tab, scaled_I,
                     y, design, first_active, obs_var, logw)

    total = _normalise(logw, w)
    if total <= 0.0:
        return path, n - 1
    k = _pick(w, total, u_fin)
    for t in range(n - 1, -1, -1):
        path[t] = X[t, k]
        if t > 0:
            k = A[t, k]
    return path, -1


def pgas_sweep(model: ObservationModel, reference, theta0, Q, sigma2, n_particles: int, rng) -> np.ndarray:
    """One conditional SMC sweep with ancestor sampling.

    Leaves ``p(theta_{1:n} | theta_0, Q, sigma2, data)`` invariant and returns
    the new trajectory, shape ``(n_states, d)``.
    """
    reference = np.ascontiguousarray(reference, dtype=float)
    n, d = reference.shape
    if n != model.n_states:
        raise InvalidInputError(f"reference path has {n} states, model expects {model.n_states}")
    if n_particles < 2:
        raise InvalidInputError("PGAS needs at least two particles")
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    chol = np.linalg.cholesky(Q)
    q_inv = np.linalg.inv(Q)
    eps = rng.standard_normal((n, n_particles - 1, d))
    u_res = rng.random(n)
    u_as = rng.random(n)
    u_fin = rng.random()
    path, failed = _csmc_as(
        model.kind, reference, np.asarray(theta0, dtype=float), chol, q_inv, float(sigma2),
        model.order, model.sv, model.cos_tab, model.sin_tab, model.scaled_I, model.y,
        model.design, model.first_active, model.obs_var, eps, u_res, u_as, u_fin,
    )
    if failed >= 0:
        raise NumericalCollapseError(
            f"all particle weights vanished at state {failed} of {n}; "
            f"try more particles (currently {n_particles}) or check the data scale"
        )
    return path
