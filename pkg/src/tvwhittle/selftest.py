"""Fast invariant checks run by ``tvwhittle selftest``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import modify
from .inference import Priors, initial_state_moments, update_initial_state, update_Q, update_sigma2
from .likelihood import LikelihoodSpec, prepare, loglik, time_domain_tvar_loglik
from .localper import segment_geometry, block_periodogram
from .spectral import (
    TWO_PI,
    ar_sdf,
    companion_moduli,
    dft,
    dft_naive,
    exact_ar1_loglik,
    fourier_frequencies,
    periodogram,
)
from .tvar import phi_to_r, r_to_phi, r_to_theta, theta_to_phi, theta_to_r


@dataclass
class CheckResult:
    name: str
    passed: bool
    deviation: float
    tolerance: float


def _check(name, deviation, tolerance):
    deviation = float(deviation)
    return CheckResult(name, bool(np.isfinite(deviation) and deviation <= tolerance), deviation, tolerance)


def check_parseval(rng):
    worst = 0.0
    for T in (7, 8, 15, 16):
        x = rng.standard_normal(T)
        x -= x.mean()
        pg = periodogram(x, fourier_frequencies(T, include_boundary=True))
        interior = pg.ordinates[pg.grid.k < T / 2]
        boundary = pg.ordinates[pg.grid.k == T / 2]
        total = 2.0 * interior.sum() + boundary.sum()
        worst = max(worst, abs(total - x @ x / TWO_PI) / (x @ x / TWO_PI))
    return _check("parseval", worst, 1e-10)


def check_fft(rng):
    x = rng.standard_normal(33)
    grid = fourier_frequencies(33)
    return _check("fft_vs_naive_dft", np.max(np.abs(dft(x, grid) - dft_naive(x, grid.frequencies))), 1e-9)


def check_roundtrip(rng):
    worst = 0.0
    for p in range(1, 7):
        r = rng.uniform(-0.95, 0.95, size=(200, p))
        worst = max(worst, np.max(np.abs(phi_to_r(r_to_phi(r)) - r)))
        theta = r_to_theta(r)
        worst = max(worst, np.max(np.abs(theta_to_r(theta) - r)))
    return _check("parameter_roundtrip", worst, 1e-10)


def check_stability(rng):
    theta = rng.normal(0.0, 1.5, size=(500, 6))
    moduli = np.array([companion_moduli(phi).max() for phi in theta_to_phi(theta)])
    # negative means every companion root lies strictly inside the unit circle
    return _check("stability_max_modulus_minus_one", moduli.max() - 1.0, -1e-12)


def check_taper():
    worst = 0.0
    for N in (8, 30, 31, 64):
        win = modify.hanning_window(N)
        worst = max(worst, abs(win.normalizer - 3.0 * N / 8.0))
    return _check("taper_normalizer", worst, 1e-9)


def check_block_whittle(rng):
    T, N, S, p = 40, 10, 5, 2
    x = rng.standard_normal(T)
    spec = LikelihoodSpec("block", order=p, N=N, S=S)
    data = prepare(x, spec)
    geom = segment_geometry(T, N, S)
    phi = theta_to_phi(rng.normal(size=(geom.M, p)))
    s2 = rng.uniform(0.5, 2.0, size=geom.M)
    bp = block_periodogram(x, geom)
    naive = 0.0
    for j in range(geom.M):
        seg = x[geom.starts[j]: geom.starts[j] + N]
        for k, w in zip(bp.grid.k, bp.frequencies):
            J = np.sum(seg * np.exp(-1j * w * np.arange(1, N + 1)))
            f = ar_sdf(phi[j], s2[j], w)
            naive -= np.log(f) + abs(J) ** 2 / (TWO_PI * N) / f
    return _check("block_whittle_oracle", abs(loglik(data, phi, s2) - naive) / abs(naive), 1e-9)


def check_dynamic_whittle(rng):
    T, m, p = 30, 4, 2
    x = rng.standard_normal(T)
    data = prepare(x, LikelihoodSpec("dynamic", order=p, m=m))
    n = T - 2 * m
    phi = theta_to_phi(rng.normal(size=(n, p)))
    s2 = rng.uniform(0.5, 2.0, size=n)
    N = 2 * m + 1
    naive = 0.0
    for i, t in enumerate(range(m + 1, T - m + 1)):
        w = TWO_PI * (1 + (t - 1) % m) / N
        win = x[t - m - 1: t + m]
        J = np.sum(win * np.exp(-1j * w * np.arange(1, N + 1)))
        f = ar_sdf(phi[i], s2[i], w)
        naive -= np.log(f) + abs(J) ** 2 / (TWO_PI * N) / f
    return _check("dynamic_whittle_oracle", abs(loglik(data, phi, s2) - naive) / abs(naive), 1e-9)


def check_time_domain(rng):
    x = rng.standard_normal(25)
    phi, s2 = 0.6, 1.3
    cond = time_domain_tvar_loglik(x, np.full((25, 1), phi), s2, 1)
    v0 = s2 / (1 - phi**2)
    initial = -0.5 * np.log(TWO_PI * v0) - 0.5 * x[0] ** 2 / v0
    return _check("time_domain_vs_exact_ar1", abs(cond - (exact_ar1_loglik(x, phi, s2) - initial)), 1e-10)


def check_conjugate_moments(rng, n: int = 20000):
    """Largest standardized error (in MC standard errors) over the three conjugate updates."""
    pri = Priors(nu0=8.0, S0=np.array([[0.3, 0.1], [0.1, 0.2]]), a0=np.zeros(2), P0=np.eye(2))
    theta = np.zeros((1, 2))
    Qs = np.array([update_Q(theta, np.zeros(2), pri, rng) for _ in range(n)])
    nu = 1 + pri.nu0
    mean_q = pri.S0 / (nu - 2 - 1)
    z_q = np.abs(Qs.mean(0) - mean_q) / (Qs.std(0) / np.sqrt(n))

    spec = LikelihoodSpec("whittle", order=1)
    data = prepare(rng.standard_normal(20), spec)
    phi = np.array([[0.3]])
    s = np.array([update_sigma2(data, phi, pri, rng) for _ in range(n)])
    shape = pri.alpha + data.n_obs
    scale = pri.beta + np.sum(TWO_PI * (1 - 2 * 0.3 * np.cos(data.omegas) + 0.09) * data.ordinates)
    z_s = abs(s.mean() - scale / (shape - 1)) / (s.std() / np.sqrt(n))

    Q = np.eye(2)
    th1 = np.array([1.0, -2.0])
    draws = np.array([update_initial_state(th1, Q, pri, rng) for _ in range(n)])
    mean0, _ = initial_state_moments(th1, Q, pri)
    z_0 = np.abs(draws.mean(0) - mean0) / (draws.std(0) / np.sqrt(n))
    return _check("conjugate_moments_z", max(z_q.max(), z_s, z_0.max()), 4.5)


def check_predictive_ar1(rng):
    x = rng.standard_normal(12)
    phi = 0.7
    grid = fourier_frequencies(12)
    w = grid.frequencies
    got = modify.predictive_dft(x, modify.FittedAR(np.array([phi]), 1.0), grid)
    poly = 1 - phi * np.exp(-1j * w)
    closed = phi * (x[0] / np.conj(poly) + np.exp(-1j * w * 13) * x[-1] / poly)
    return _check("predictive_dft_ar1", np.max(np.abs(got - closed)), 1e-9)


def run_selftest(seed: int = 12345) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        check_parseval(rng),
        check_fft(rng),
        check_roundtrip(rng),
        check_stability(rng),
        check_taper(),
        check_block_whittle(rng),
        check_dynamic_whittle(rng),
        check_time_domain(rng),
        check_predictive_ar1(rng),
        check_conjugate_moments(rng),
    ]


def format_report(results) -> str:
    lines = [f"{'check':<32} {'status':<6} {'max deviation':>14} {'tolerance':>10}"]
    for r in results:
        lines.append(f"{r.name:<32} {'PASS' if r.passed else 'FAIL':<6} {r.deviation:>14.6g} {r.tolerance:>10.3g}")
    return "\n".join(lines)
