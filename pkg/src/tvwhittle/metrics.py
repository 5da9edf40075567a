"""Comparison metrics over replicated datasets: RMSE, efficiency and posterior perturbation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidInputError


def _pair(a, b, what):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise InvalidInputError(f"{what}: shapes {a.shape} and {b.shape} do not match") from exc
    if b.ndim > a.ndim:
        raise InvalidInputError(f"{what}: reference has more dimensions than the estimates")
    return a, b


def rmse(estimates, truth) -> float:
    """Root mean squared error averaged over replications, parameters and (if present) time.

    ``estimates`` has the replication index first, e.g. ``(n_rep, p)`` or
    ``(n_rep, T, p)``; ``truth`` broadcasts against one replication.
    """
    est, tru = _pair(estimates, truth, "rmse")
    return float(np.sqrt(np.mean((est - tru) ** 2)))


def efficiency(rmse_time: float, rmse_approx: float) -> float:
    """Time-domain RMSE over approximate-method RMSE; above one means the approximation won."""
    if not rmse_approx > 0:
        raise InvalidInputError("approximate-method RMSE must be positive")
    return float(rmse_time) / float(rmse_approx)


def perturbation(quantiles_approx, quantiles_time) -> float:
    """Root mean squared gap between matching posterior quantiles.

    Both arrays are ``(n_rep, r, ..., p)``; the mean runs over every axis.
    """
    a = np.asarray(quantiles_approx, dtype=float)
    b = np.asarray(quantiles_time, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"quantile grids differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def common_times(T: int, specs) -> np.ndarray:
    """1-based times on which every method has an estimate of its own.

    The dynamic Whittle likelihood has no observations in the first and
    last ``m`` time points; other families cover ``1..T`` after interpolation.
    """
    lo, hi = 1, T
    for spec in specs:
        if spec.family == "dynamic":
            lo, hi = max(lo, spec.m + 1), min(hi, T - spec.m)
    if lo > hi:
        raise InvalidInputError("methods share no common time range")
    return np.arange(lo, hi + 1)


@dataclass
class ReplicationResult:
    """Per-replication point estimates and quantile tables for each method.

    ``medians[label]`` is ``(n_rep, T, p)`` and ``quantiles[label]`` is
    ``(n_rep, r, T, p)``; ``truth`` is ``(T, p)``.
    """

    truth: np.ndarray
    medians: dict = field(default_factory=dict)
    quantiles: dict = field(default_factory=dict)

    def add(self, label: str, median, quantiles):
        self.medians.setdefault(label, []).append(np.asarray(median, dtype=float))
        self.quantiles.setdefault(label, []).append(np.asarray(quantiles, dtype=float))

    def summary(self, reference: str, times=None) -> list[dict]:
        """Efficiency and perturbation of every method against ``reference``.

        ``times`` restricts the comparison to the given 1-based times.
        """
        idx = slice(None) if times is None else np.asarray(times) - 1
        ref_med = np.stack(self.medians[reference])[:, idx]
        ref_q = np.stack(self.quantiles[reference])[:, :, idx]
        truth = self.truth[idx]
        ref_rmse = rmse(ref_med, truth)
        rows = []
        for label in self.medians:
            med = np.stack(self.medians[label])[:, idx]
            q = np.stack(self.quantiles[label])[:, :, idx]
            r = rmse(med, truth)
            rows.append({
                "method": label,
                "rmse": r,
                "efficiency": efficiency(ref_rmse, r),
                "perturbation": perturbation(q, ref_q),
                "n_rep": med.shape[0],
            })
        return rows
