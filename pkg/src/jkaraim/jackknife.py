"""Jackknife residuals, combined statistics, thresholds and the detector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import distkit
from .errors import SubsetRankDeficient
from .model_core import AXIS_UP, LinearModel, SolutionOps
from .threat import ThreatModel


@dataclass
class JkStatistics:
    stats: dict            # mode id -> test statistic (m)
    thresholds: dict       # mode id -> threshold (m)
    alerts: dict           # mode id -> bool
    skipped: list          # mode ids with rank-deficient subsets
    tau: float

    @property
    def alert(self) -> bool:
        return any(self.alerts.values())


def residual(model: LinearModel, ops: SolutionOps, mode, i: int) -> float:
    """Jackknife residual t_i = y_i - g_i x_hat_subset for i in the mode's
    excluded set."""
    if i not in mode.excluded:
        raise ValueError(f"index {i} not excluded by mode {mode.id}")
    Sk, _ = ops.subset(mode.excluded)
    return float(model.y[i] - model.G[i] @ (Sk @ model.y))


def stat_coeffs(model: LinearModel, ops: SolutionOps, mode,
                axis: int = AXIS_UP) -> np.ndarray:
    """Coefficients c with t* = c . eps under nominal errors.

    Single-exclusion modes use the raw residual row of (I - G S_k);
    larger modes use the S_{v,i}-weighted combination.
    """
    Sk, Pt = ops.subset(mode.excluded)
    idx = sorted(mode.excluded)
    resid_rows = -Pt[idx]
    resid_rows[np.arange(len(idx)), idx] += 1.0
    if len(idx) == 1:
        return resid_rows[0]
    return ops.S[axis, idx] @ resid_rows


def combined_stat(model: LinearModel, ops: SolutionOps, mode,
                  axis: int = AXIS_UP):
    """Test statistic for one fault mode plus its error coefficients."""
    idx = sorted(mode.excluded)
    coeffs = stat_coeffs(model, ops, mode, axis)
    if len(idx) == 1:
        t = residual(model, ops, mode, idx[0])
    else:
        t = float(sum(ops.S[axis, i] * residual(model, ops, mode, i)
                      for i in idx))
    return t, coeffs


def stat_distributions(model: LinearModel, ops: SolutionOps,
                       threat: ThreatModel, acc_bounds,
                       axis: int = AXIS_UP, n_points=4096, mode_ids=None):
    """Nominal distributions of every computable mode statistic.

    Returns (dists, skipped) where dists maps mode id -> GridDistribution
    and skipped lists rank-deficient (untestable) satellite-subset modes.
    Constellation modes are never jackknife-testable and are not included.
    mode_ids restricts the work to a subset of satellite modes.
    """
    rows, ids, skipped = [], [], []
    wanted = None if mode_ids is None else set(mode_ids)
    for mode in threat.sat_modes():
        if wanted is not None and mode.id not in wanted:
            continue
        try:
            rows.append(stat_coeffs(model, ops, mode, axis))
            ids.append(mode.id)
        except SubsetRankDeficient:
            skipped.append(mode.id)
    if not rows:
        return {}, skipped
    dists = distkit.convolve_batch(np.array(rows), acc_bounds,
                                   n_points=n_points)
    return dict(zip(ids, dists)), skipped


def thresholds(threat: ThreatModel, stat_dists, c_req_fa: float):
    """Continuity-allocated per-mode thresholds T_k.

    T_k is the magnitude of the statistic's quantile at
    C_REQ,FA / (2 N_fault_modes P_H0), the equal continuity split.
    """
    p = c_req_fa / (2.0 * threat.n_fault_modes * threat.p_h0)
    return {mid: abs(float(d.quantile(p))) for mid, d in stat_dists.items()}


def run_detector(model: LinearModel, threat: ThreatModel, acc_bounds,
                 y=None, axis: int = AXIS_UP, c_req_fa: float = 3.99e-6,
                 ops: SolutionOps = None, stat_dists=None,
                 thresh=None, n_points=4096) -> JkStatistics:
    """Multi-hypothesis jackknife detection for one epoch.

    Rank-deficient modes are skipped and reported; constellation modes are
    handled by the solution-separation path, not here.
    """
    if y is not None:
        model.y = np.asarray(y, dtype=float)
    if ops is None:
        ops = SolutionOps(model)
    skipped = []
    if stat_dists is None:
        stat_dists, skipped = stat_distributions(
            model, ops, threat, acc_bounds, axis, n_points)
    if thresh is None:
        thresh = thresholds(threat, stat_dists, c_req_fa)

    stats, alerts = {}, {}
    for mode in threat.sat_modes():
        if mode.id not in thresh:
            if mode.id not in skipped:
                skipped.append(mode.id)
            continue
        t, _ = combined_stat(model, ops, mode, axis)
        stats[mode.id] = t
        alerts[mode.id] = abs(t) >= thresh[mode.id]
    return JkStatistics(stats, thresh, alerts, skipped, tau=c_req_fa)
