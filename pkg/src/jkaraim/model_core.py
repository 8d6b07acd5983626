"""Linearized measurement model and solution operators.

State ordering is (east, north, up, clock_1, ..., clock_C); position axes
are addressed with 0-based indices 0=east, 1=north, 2=up.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (InsufficientGeometry, SingularNormalMatrix,
                     SubsetRankDeficient)

AXIS_EAST, AXIS_NORTH, AXIS_UP = 0, 1, 2

# Relative singular-value cutoff for rank decisions.
RANK_RTOL = 1e-8

WGS84_A = 6378137.0
WGS84_E2 = 6.69437999014e-3


@dataclass
class LinearModel:
    """Geometry matrix, weights and linearized observations for one epoch.

    G rows are ENU unit line-of-sight components toward each satellite plus
    one 0/1 clock-indicator column per constellation.
    """

    G: np.ndarray
    W: np.ndarray
    y: np.ndarray
    sat_ids: list
    const_of: list

    def __post_init__(self):
        self.G = np.asarray(self.G, dtype=float)
        self.W = np.asarray(self.W, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        n, m = self.G.shape
        if n < m:
            raise InsufficientGeometry(f"{n} rows for {m} states")
        if np.any(self.W <= 0):
            raise ValueError("all weights must be positive")
        n_clock = m - 3
        if n_clock > 0:
            clock = self.G[:, 3:]
            ok = np.all(np.isin(clock, (0.0, 1.0))) and \
                np.all(clock.sum(axis=1) == 1.0)
            if not ok:
                raise ValueError("each row needs exactly one unit clock entry")
        if np.linalg.matrix_rank(self.G, tol=None) < m:
            raise InsufficientGeometry("geometry matrix is rank deficient")

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def m(self) -> int:
        return self.G.shape[1]

    @property
    def constellations(self) -> list:
        seen = []
        for c in self.const_of:
            if c not in seen:
                seen.append(c)
        return seen


def _solution_matrix(G, w, err=SingularNormalMatrix):
    """(G'WG)^-1 G'W via a rank-revealing decomposition of sqrt(W)G."""
    sw = np.sqrt(w)
    A = sw[:, None] * G
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0 or s[-1] < RANK_RTOL * s[0]:
        raise err("weighted geometry is rank deficient")
    S = (Vt.T / s) @ (U.T * sw[None, :])
    return S


def wls_solve(model: LinearModel):
    """Full-set weighted least squares. Returns (state, S)."""
    S = _solution_matrix(model.G, model.W)
    return S @ model.y, S


def subset_ops(model: LinearModel, excluded):
    """Subset solution matrix and projection for one fault mode.

    Excluded rows get zero weight; their columns in S_k are exactly zero.
    Raises SubsetRankDeficient when the remaining geometry cannot observe
    all states (e.g. a whole constellation removed).
    """
    excluded = sorted(set(int(i) for i in excluded))
    wk = model.W.copy()
    wk[excluded] = 0.0
    keep = np.ones(model.n, dtype=bool)
    keep[excluded] = False
    if keep.sum() < model.m:
        raise SubsetRankDeficient("too few measurements remain")
    Sk_red = _solution_matrix(model.G[keep], model.W[keep],
                              err=SubsetRankDeficient)
    Sk = np.zeros((model.m, model.n))
    Sk[:, keep] = Sk_red
    return Sk, model.G @ Sk


class SolutionOps:
    """Full-set solution matrix plus cached per-mode subset operators."""

    def __init__(self, model: LinearModel):
        self.model = model
        self.S = _solution_matrix(model.G, model.W)
        self._cache = {}

    def subset(self, excluded):
        key = frozenset(int(i) for i in excluded)
        if not key:
            return self.S, self.model.G @ self.S
        if key not in self._cache:
            self._cache[key] = subset_ops(self.model, key)
        return self._cache[key]


def q_vector(model: LinearModel, ops: SolutionOps, excluded, axis: int):
    """Coefficient vector of the nominal-error part of the position error
    under the fault mode excluding the given indices.

    q = s_v E + sum_{j in excluded} S_{v,j} g_j S_k, where E zeroes the
    excluded entries of the full-solution row s_v.
    """
    Sk, _ = ops.subset(excluded)
    q = ops.S[axis].copy()
    q[list(excluded)] = 0.0
    for j in excluded:
        q += ops.S[axis, j] * (model.G[j] @ Sk)
    return q


def bias_projection(S_mat, b_nom, axis: int) -> float:
    """Worst-case projection of per-measurement nominal biases onto one
    position axis: sum_i |S[axis, i]| * b_nom[i]."""
    b = np.asarray(b_nom, dtype=float)
    if np.any(b < 0):
        raise ValueError("b_nom entries must be non-negative")
    return float(np.abs(S_mat[axis]) @ b)


def geodetic_to_ecef(lat_deg, lon_deg, height=0.0):
    lat = np.radians(lat_deg)
    lon = np.radians(lon_deg)
    sl = np.sin(lat)
    N = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sl ** 2)
    x = (N + height) * np.cos(lat) * np.cos(lon)
    y = (N + height) * np.cos(lat) * np.sin(lon)
    z = (N * (1.0 - WGS84_E2) + height) * sl
    return np.array([x, y, z])


def ecef_to_geodetic(pos):
    x, y, z = pos
    lon = np.arctan2(y, x)
    p = np.hypot(x, y)
    lat = np.arctan2(z, p * (1.0 - WGS84_E2))
    for _ in range(6):
        sl = np.sin(lat)
        N = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sl ** 2)
        h = p / np.cos(lat) - N
        lat = np.arctan2(z, p * (1.0 - WGS84_E2 * N / (N + h)))
    return np.degrees(lat), np.degrees(lon), h


def enu_rotation(lat_deg, lon_deg):
    """Rows transform an ECEF delta into (east, north, up)."""
    lat = np.radians(lat_deg)
    lon = np.radians(lon_deg)
    sl, cl = np.sin(lat), np.cos(lat)
    so, co = np.sin(lon), np.cos(lon)
    return np.array([
        [-so, co, 0.0],
        [-sl * co, -sl * so, cl],
        [cl * co, cl * so, sl],
    ])


def elevation_azimuth(user_ecef, sat_ecef):
    """Elevation and azimuth (degrees) of a satellite seen from a user."""
    lat, lon, _ = ecef_to_geodetic(user_ecef)
    R = enu_rotation(lat, lon)
    los = R @ (np.asarray(sat_ecef, dtype=float) - np.asarray(user_ecef,
                                                             dtype=float))
    rng = np.linalg.norm(los)
    el = np.degrees(np.arcsin(los[2] / rng))
    az = np.degrees(np.arctan2(los[0], los[1])) % 360.0
    return el, az


def assemble_geometry(user_pos, sats, mask_angle=5.0, weights=None,
                      sat_ids=None):
    """Build the linear model from user/satellite ECEF geometry.

    sats is a list of (ecef_position, constellation_tag). Satellites below
    the mask angle are dropped; the state dimension is 3 + number of
    distinct constellations among the visible satellites. Observations are
    initialized to zero (fill in after error synthesis).
    """
    user_pos = np.asarray(user_pos, dtype=float)
    lat, lon, _ = ecef_to_geodetic(user_pos)
    R = enu_rotation(lat, lon)

    rows, consts, ids, els = [], [], [], []
    for i, (pos, tag) in enumerate(sats):
        los = R @ (np.asarray(pos, dtype=float) - user_pos)
        rng = np.linalg.norm(los)
        u = los / rng
        el = np.degrees(np.arcsin(u[2]))
        if el <= mask_angle:
            continue
        rows.append(u)
        consts.append(tag)
        ids.append(sat_ids[i] if sat_ids is not None else f"s{i}")
        els.append(el)

    tags = []
    for c in consts:
        if c not in tags:
            tags.append(c)
    m = 3 + len(tags)
    n = len(rows)
    if n < m:
        raise InsufficientGeometry(f"{n} visible satellites for {m} states")
    G = np.zeros((n, m))
    for i, (u, c) in enumerate(zip(rows, consts)):
        G[i, :3] = u
        G[i, 3 + tags.index(c)] = 1.0
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    model = LinearModel(G, w, np.zeros(n), ids, consts)
    model.elevations = np.array(els)
    return model
