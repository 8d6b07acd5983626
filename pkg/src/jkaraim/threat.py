"""Fault-mode enumeration with priors, k_max and unmonitored-fault mass."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from scipy.stats import binom

from .errors import InsufficientRedundancy


@dataclass(frozen=True)
class FaultMode:
    id: int
    kind: str                      # "sat_subset" | "constellation"
    excluded: frozenset
    prior: float

    def __post_init__(self):
        if self.kind not in ("sat_subset", "constellation"):
            raise ValueError(f"unknown fault-mode kind {self.kind!r}")
        if not self.excluded:
            raise ValueError("excluded set must be non-empty")
        if not (0.0 < self.prior < 1.0):
            raise ValueError("prior must lie in (0, 1)")


@dataclass
class ThreatModel:
    modes: list
    p_h0: float
    p_not_monitored: float
    k_max: int

    @property
    def n_fault_modes(self) -> int:
        return len(self.modes)

    def sat_modes(self):
        return [m for m in self.modes if m.kind == "sat_subset"]

    def constellation_modes(self):
        return [m for m in self.modes if m.kind == "constellation"]


def _binom_tail(n, p, k):
    """P(more than k of n independent events)."""
    if p <= 0.0:
        return 0.0
    return float(binom.sf(k, n, p))


def determine_kmax(n_sats_per_const, p_sat, p_const, p_thres):
    """Smallest k_max whose residual simultaneous-fault probability fits
    under the unmonitored-risk threshold, plus that residual mass.

    Unmonitored constellation events (the whole-constellation fault for a
    single constellation, simultaneous multi-constellation faults
    otherwise) are folded into p_not_monitored.
    """
    n = int(sum(n_sats_per_const))
    n_const = len(n_sats_per_const)
    k_max = 1
    while k_max < n and _binom_tail(n, p_sat, k_max) > p_thres:
        k_max += 1
    residual = _binom_tail(n, p_sat, k_max)
    if n_const <= 1:
        const_term = p_const * n_const
    else:
        # Single-constellation faults are monitored by solution separation;
        # only simultaneous constellation faults remain unmonitored.
        const_term = _binom_tail(n_const, p_const, 1)
    return k_max, residual + const_term


def enumerate_modes(n, k_max, const_partition, p_sat, p_const, m=None):
    """All satellite-subset modes of size 1..k_max plus (for two or more
    constellations) one whole-constellation mode each.

    const_partition maps constellation tag -> iterable of row indices.
    Single-fault modes come first in index order, then larger subsets in
    lexicographic order, then constellation modes. m overrides the default
    3-position-plus-clocks state count for reduced-state toy models.
    """
    const_partition = {k: sorted(v) for k, v in const_partition.items()}
    n_const = len(const_partition)
    m_min = 3 + n_const if m is None else m
    if k_max > n - m_min:
        raise InsufficientRedundancy(
            f"k_max={k_max} exceeds redundancy n-m={n - m_min}")

    modes = []
    mode_id = 1
    no_const_fault = (1.0 - p_const) ** n_const
    for size in range(1, k_max + 1):
        for idx in combinations(range(n), size):
            prior = (p_sat ** size * (1.0 - p_sat) ** (n - size)
                     * no_const_fault)
            modes.append(FaultMode(mode_id, "sat_subset", frozenset(idx),
                                   prior))
            mode_id += 1
    if n_const >= 2:
        no_sat_fault = (1.0 - p_sat) ** n
        for tag in const_partition:
            prior = (p_const * (1.0 - p_const) ** (n_const - 1)
                     * no_sat_fault)
            modes.append(FaultMode(mode_id, "constellation",
                                   frozenset(const_partition[tag]), prior))
            mode_id += 1

    p_h0 = (1.0 - p_sat) ** n * (1.0 - p_const) ** n_const
    p_nm = _binom_tail(n, p_sat, k_max)
    if n_const <= 1:
        p_nm += p_const * n_const
    else:
        p_nm += _binom_tail(n_const, p_const, 1)
    return ThreatModel(modes, p_h0, p_nm, k_max)
