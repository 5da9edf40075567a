"""Replication harness: the AR(1) grid study, the tvAR experiments and the single-series fit."""
from __future__ import annotations

import csv
import logging
import os
import re
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .exceptions import InvalidInputError
from .inference import GibbsConfig, Priors, chain_rng, gibbs_run
from .io import read_rows, write_rows
from .likelihood import LikelihoodSpec, prepare
from .metrics import common_times, efficiency, perturbation, rmse
from .modify import Modification
from .spectral import (
    QUANTILE_PROBS,
    TWO_PI,
    ar1_whittle_loglik,
    default_phi_grid,
    exact_ar1_loglik,
    grid_posterior,
    transfer_sq,
)
from .tvar import DGPS, simulate_tvar

log = logging.getLogger(__name__)

EXPERIMENT_ORDER = {1: 2, 2: 3, 3: 2}
MOD_CODES = {
    "raw": "none", "TA": "taper", "TR": "taper_rescaled", "PW": "prewhiten",
    "BC": "boundary_correct", "BCN": "boundary_correct",
}
DEFAULT_METHODS = tuple(
    f"{base}{suffix}"
    for base in ("DW-m15", "DW-m30", "BW-N30-S15", "BW-N60-S30")
    for suffix in ("", "-TA", "-PW", "-BC")
)
Q_COLUMNS = tuple(f"q{p:g}" for p in QUANTILE_PROBS)


def make_modification(code: str, clip_negative: bool = True) -> Modification:
    """Modification from a short code (raw, TA, TR, PW, BC, BCN).

    Boundary correction truncates negative ordinates at zero unless
    ``clip_negative`` is false.
    """
    if code not in MOD_CODES:
        raise InvalidInputError(f"unknown modification code {code!r}; choose from {sorted(MOD_CODES)}")
    kind = MOD_CODES[code]
    if kind == "boundary_correct":
        return Modification(kind, with_taper=code == "BC", clip_negative=clip_negative)
    return Modification(kind)


_METHOD = re.compile(r"^(TD|W|DW-m(\d+)|BW-N(\d+)-S(\d+))(?:-(TA|TR|PW|BC|BCN))?(-SV)?$")


def parse_method(label: str, order: int, clip_negative: bool = True) -> LikelihoodSpec:
    """Likelihood spec from a method label such as ``DW-m15-TA`` or ``BW-N30-S15``."""
    m = _METHOD.match(label)
    if not m:
        raise InvalidInputError(f"cannot parse method label {label!r}")
    head, dw_m, bw_n, bw_s, mod, sv = m.groups()
    modification = make_modification(mod or "raw", clip_negative)
    sv = sv is not None
    if head == "TD":
        if mod:
            raise InvalidInputError("the time-domain likelihood takes no modification")
        return LikelihoodSpec("time_domain", order=order, sv=sv)
    if head == "W":
        return LikelihoodSpec("whittle", order=order, modification=modification, sv=sv)
    if dw_m:
        return LikelihoodSpec("dynamic", order=order, m=int(dw_m), modification=modification, sv=sv)
    return LikelihoodSpec("block", order=order, N=int(bw_n), S=int(bw_s), modification=modification, sv=sv)


def method_key(label: str) -> int:
    return zlib.crc32(label.encode())


# ---------------------------------------------------------------- grid study

def simulate_ar1(phi: float, T: int, rng, sigma2: float = 1.0) -> np.ndarray:
    """Stationary Gaussian AR(1) sample started from its stationary law."""
    eps = rng.standard_normal(T) * np.sqrt(sigma2)
    x = np.empty(T)
    x[0] = eps[0] / np.sqrt(1.0 - phi * phi)
    for t in range(1, T):
        x[t] = phi * x[t - 1] + eps[t]
    return x


def _td_loglik(x, grid):
    return exact_ar1_loglik(x, grid, 1.0)


def _whittle_loglik(x, grid):
    return ar1_whittle_loglik(x, grid, 1.0, mirrored=True)


def grid_study(phis, Ts, n_rep: int, seed: int = 0, grid=None, n_curves: int = 0):
    """Efficiency and perturbation of the Whittle grid posterior for AR(1).

    For every replication one series of length ``max(Ts)`` is simulated per
    ``phi`` and its prefixes are analysed, so the sample sizes share data.
    Returns ``(summary_rows, curve_rows)``; curves are kept for the first
    ``n_curves`` replications.
    """
    grid = default_phi_grid() if grid is None else np.asarray(grid, dtype=float)
    Ts = sorted(int(T) for T in Ts)
    rows, curves = [], []
    for phi in phis:
        if not -1.0 < phi < 1.0:
            raise InvalidInputError(f"phi={phi} outside (-1, 1)")
        mle = {T: {"time": [], "whittle": []} for T in Ts}
        qs = {T: {"time": [], "whittle": []} for T in Ts}
        for rep in range(n_rep):
            rng = chain_rng(seed + rep, method_key(f"ar1:{phi!r}"))
            x_full = simulate_ar1(phi, Ts[-1], rng)
            for T in Ts:
                x = x_full[:T]
                for name, ll in (("time", _td_loglik), ("whittle", _whittle_loglik)):
                    post = grid_posterior(x, grid, ll)
                    mle[T][name].append(post.mode)
                    qs[T][name].append(post.quantiles)
                    if rep < n_curves:
                        curves.extend(
                            {"phi_true": phi, "T": T, "rep": rep, "method": name, "phi": g, "weight": w}
                            for g, w in zip(grid, post.weights)
                        )
        for T in Ts:
            e = efficiency(rmse(mle[T]["time"], phi), rmse(mle[T]["whittle"], phi))
            pert = perturbation(np.array(qs[T]["whittle"]), np.array(qs[T]["time"]))
            rows.append({"phi_true": phi, "T": T, "efficiency": e, "perturbation": pert, "n_rep": n_rep})
    return rows, curves


GRID_COLUMNS = ("phi_true", "T", "efficiency", "perturbation", "n_rep")
CURVE_COLUMNS = ("phi_true", "T", "rep", "method", "phi", "weight")


# ---------------------------------------------------------------- experiments

@dataclass(frozen=True)
class ExperimentSetup:
    experiment: int
    T: int
    n_rep: int
    methods: tuple
    gibbs: GibbsConfig
    seed: int = 0
    rescale: bool = False
    scale_q_by_step: bool = True
    clip_negative: bool = True

    @property
    def order(self) -> int:
        return EXPERIMENT_ORDER[self.experiment]

    def specs(self) -> dict:
        labels = ("TD",) + tuple(m for m in self.methods if m != "TD")
        return {lab: parse_method(lab, self.order, self.clip_negative) for lab in labels}

    def truth(self):
        if self.experiment == 3:
            return DGPS[3](self.T, rescale=self.rescale)
        return DGPS[self.experiment](self.T)


def validate_setup(setup: ExperimentSetup):
    """Fail fast on bad geometry before any sampling starts."""
    if setup.experiment not in DGPS:
        raise InvalidInputError(f"experiment must be one of {sorted(DGPS)}")
    if setup.n_rep < 1:
        raise InvalidInputError("n_rep must be >= 1")
    setup.truth()
    x = np.random.default_rng(0).standard_normal(setup.T)
    for spec in setup.specs().values():
        prepare(x, replace(spec, modification=Modification()) if spec.family != "time_domain" else spec)


def run_replication(setup: ExperimentSetup, rep: int) -> dict:
    """Simulate one dataset and fit every method; returns medians and quantiles per method."""
    path = setup.truth()
    data_rng = np.random.default_rng(setup.seed + rep)
    x = simulate_tvar(path, data_rng)
    out = {}
    for label, spec in setup.specs().items():
        rng = chain_rng(setup.seed + rep, method_key(label))
        priors = Priors.default(spec, scale_by_step=setup.scale_q_by_step)
        draws = gibbs_run(x, spec, priors, setup.gibbs, rng=rng)
        q = draws.phi_quantiles()
        out[label] = {
            "quantiles": q,
            "median_path": q[QUANTILE_PROBS.index(0.5)],
            "update_rate": draws.diagnostics["path_update_rate"],
        }
    return {"rep": rep, "methods": out}


REP_COLUMNS = ("rep", "method", "sse", "n_el", "pert_sse", "n_q", "update_rate")
SUMMARY_COLUMNS = ("method", "rmse", "efficiency", "perturbation", "n_rep")
MEDIAN_COLUMNS = ("rep", "method", "t", "param", "value")
PATH_COLUMNS = ("rep", "method", "t", "param") + Q_COLUMNS


def replication_rows(setup: ExperimentSetup, result: dict):
    """Sufficient statistics of one replication over the common time range."""
    times = common_times(setup.T, setup.specs().values())
    idx = times - 1
    truth = setup.truth().phi[idx]
    ref_q = result["methods"]["TD"]["quantiles"][:, idx]
    rows = []
    for label, res in result["methods"].items():
        err = res["median_path"][idx] - truth
        gap = res["quantiles"][:, idx] - ref_q
        rows.append({
            "rep": result["rep"], "method": label,
            "sse": float(np.sum(err**2)), "n_el": int(err.size),
            "pert_sse": float(np.sum(gap**2)), "n_q": int(gap.size),
            "update_rate": res["update_rate"],
        })
    return rows


def summarise(rep_rows, methods) -> list[dict]:
    """Pool per-replication statistics (in replication order) into the method summary."""
    rep_rows = sorted(rep_rows, key=lambda r: (r["rep"], r["method"]))
    pooled = {}
    for r in rep_rows:
        acc = pooled.setdefault(r["method"], [0.0, 0, 0.0, 0, 0])
        acc[0] += r["sse"]
        acc[1] += r["n_el"]
        acc[2] += r["pert_sse"]
        acc[3] += r["n_q"]
        acc[4] += 1
    td_rmse = np.sqrt(pooled["TD"][0] / pooled["TD"][1])
    rows = []
    for label in methods:
        sse, n, psse, nq, nrep = pooled[label]
        r = float(np.sqrt(sse / n))
        rows.append({
            "method": label, "rmse": r, "efficiency": efficiency(td_rmse, r),
            "perturbation": float(np.sqrt(psse / nq)), "n_rep": nrep,
        })
    return rows


def _median_rows(setup, result):
    for label, res in result["methods"].items():
        med = res["median_path"]
        for t in range(med.shape[0]):
            for j in range(med.shape[1]):
                yield {"rep": result["rep"], "method": label, "t": t + 1, "param": f"phi{j + 1}", "value": med[t, j]}


def _path_rows(result):
    for label, res in result["methods"].items():
        q = res["quantiles"]
        for t in range(q.shape[1]):
            for j in range(q.shape[2]):
                row = {"rep": result["rep"], "method": label, "t": t + 1, "param": f"phi{j + 1}"}
                row.update({c: q[i, t, j] for i, c in enumerate(Q_COLUMNS)})
                yield row


def _keep_reps(path: Path, reps):
    """Rewrite a per-replication table keeping only rows of ``reps``."""
    if not path.exists():
        return
    tmp = path.with_suffix(".tmp")
    with open(path, newline="") as src, open(tmp, "w", newline="") as dst:
        reader = csv.reader(src)
        writer = csv.writer(dst)
        header = next(reader, None)
        if header is not None:
            writer.writerow(header)
            col = header.index("rep")
            writer.writerows(row for row in reader if int(row[col]) in reps)
    os.replace(tmp, path)


def run_experiment(setup: ExperimentSetup, out: Path, threads: int = 1, n_path_reps: int = 1) -> list[dict]:
    """Run (or resume) all replications and write the result tables to ``out``.

    Replications already present in ``replications.csv`` are skipped. Each
    finished replication is appended immediately by the parent process.
    """
    validate_setup(setup)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    labels = list(setup.specs())
    rep_file = out / "replications.csv"
    done_rows = read_rows(rep_file) if rep_file.exists() else []
    counts = {}
    for r in done_rows:
        counts[r["rep"]] = counts.get(r["rep"], 0) + 1
    complete = {rep for rep, c in counts.items() if c == len(labels)}
    done_rows = [r for r in done_rows if r["rep"] in complete]
    todo = [rep for rep in range(setup.n_rep) if rep not in complete]
    if rep_file.exists():
        log.info("resuming: %d replications already complete", len(complete))
        # drop partially written replications from every table
        write_rows(rep_file, REP_COLUMNS, sorted(done_rows, key=lambda r: (r["rep"], r["method"])))
        for name in ("medians.csv", "paths.csv"):
            _keep_reps(out / name, complete)

    def record(result):
        rows = replication_rows(setup, result)
        write_rows(out / "medians.csv", MEDIAN_COLUMNS, _median_rows(setup, result), append=True)
        if result["rep"] < n_path_reps:
            write_rows(out / "paths.csv", PATH_COLUMNS, _path_rows(result), append=True)
        # replications.csv is written last and marks the replication as complete
        write_rows(rep_file, REP_COLUMNS, rows, append=True)
        done_rows.extend(rows)
        log.info("replication %d done", result["rep"])

    if threads > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for result in pool.map(run_replication, [setup] * len(todo), todo):
                record(result)
    else:
        for rep in todo:
            record(run_replication(setup, rep))

    summary = summarise(done_rows, labels)
    write_rows(out / "summary.csv", SUMMARY_COLUMNS, summary)
    truth = setup.truth().phi
    write_rows(out / "truth.csv", ("t", "param", "value"), (
        {"t": t + 1, "param": f"phi{j + 1}", "value": truth[t, j]}
        for t in range(truth.shape[0]) for j in range(truth.shape[1])
    ))
    return summary


# ---------------------------------------------------------------- single-series fit

def preprocess(x, difference: str = "none") -> tuple[np.ndarray, float]:
    """Optionally first-difference, then centre. Returns the series and the removed mean."""
    x = np.asarray(x, dtype=float)
    if difference == "first":
        x = np.diff(x)
    elif difference != "none":
        raise InvalidInputError(f"difference must be 'none' or 'first', got {difference!r}")
    mean = float(x.mean())
    return x - mean, mean


def spectral_summaries(draws, n_freq: int = 64, max_times: int = 200):
    """Posterior medians of the log spectral density and of ``log |phi(e^{-iw})|^2``.

    Evaluated at up to ``max_times`` evenly spread states and ``n_freq``
    frequencies in (0, pi).
    """
    n = draws.theta.shape[1]
    states = np.unique(np.linspace(0, n - 1, min(n, max_times)).round().astype(int))
    omegas = np.pi * (np.arange(1, n_freq + 1) - 0.5) / n_freq
    phi = draws.phi[:, states]  # (D, S, p)
    log_tr = np.log(transfer_sq(phi[:, :, None, :], omegas))  # (D, S, F)
    log_s2 = draws.log_sigma2[:, states]
    log_f = log_s2[:, :, None] - np.log(TWO_PI) - log_tr
    return draws.state_times[states], omegas, np.median(log_f, axis=0), np.median(log_tr, axis=0)


def fit_outputs(draws, dates=None) -> dict:
    """Rows for path quantiles, spectrogram and transfer function tables."""
    probs = (0.025, 0.5, 0.975)
    phi_q = draws.phi_quantiles(probs)
    ls_q = draws.log_sigma2_quantiles(probs)
    path_rows = []
    for t in range(draws.T):
        base = {"t": t + 1, "date": dates[t] if dates else ""}
        for j in range(phi_q.shape[2]):
            path_rows.append({**base, "param": f"phi{j + 1}", "q0.025": phi_q[0, t, j],
                              "q0.5": phi_q[1, t, j], "q0.975": phi_q[2, t, j]})
        path_rows.append({**base, "param": "log_sigma2", "q0.025": ls_q[0, t],
                          "q0.5": ls_q[1, t], "q0.975": ls_q[2, t]})
    times, omegas, log_f, log_tr = spectral_summaries(draws)
    spec_rows = [{"t": int(t), "omega": w, "log_f": log_f[i, k]}
                 for i, t in enumerate(times) for k, w in enumerate(omegas)]
    tr_rows = [{"t": int(t), "omega": w, "log_transfer_sq": log_tr[i, k]}
               for i, t in enumerate(times) for k, w in enumerate(omegas)]
    return {"paths": path_rows, "spectrogram": spec_rows, "transfer": tr_rows}


FIT_PATH_COLUMNS = ("t", "date", "param", "q0.025", "q0.5", "q0.975")


def run_fit(x, spec: LikelihoodSpec, gibbs: GibbsConfig, out: Path, priors: Priors | None = None,
            dates=None, difference: str = "none") -> dict:
    """Fit one series and write path quantiles, spectrogram and transfer-function medians."""
    x, mean = preprocess(x, difference)
    if dates is not None and difference == "first":
        dates = dates[1:]
    draws = gibbs_run(x, spec, priors, gibbs, rng=chain_rng(gibbs.seed, method_key(spec.label)))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    tables = fit_outputs(draws, dates)
    write_rows(out / "path_quantiles.csv", FIT_PATH_COLUMNS, tables["paths"])
    write_rows(out / "spectrogram.csv", ("t", "omega", "log_f"), tables["spectrogram"])
    write_rows(out / "transfer.csv", ("t", "omega", "log_transfer_sq"), tables["transfer"])
    return {"subtracted_mean": mean, "n_obs": int(x.size), **draws.diagnostics}
