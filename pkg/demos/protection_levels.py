"""Vertical protection levels, three ways, on one almanac geometry.

Computes the solution-separation benchmark VPL, the jackknife VPL with
Gaussian bounds (the two agree closely), and the jackknife VPL with
principal-Gaussian bounds, which is substantially tighter when the
per-satellite error models are heavy tailed.

Run:  python demos/protection_levels.py
"""

import numpy as np

from jkaraim import (IntegrityBudget, SolutionOps, assemble_geometry,
                     baseline_araim_pl, default_almanac, default_table,
                     determine_kmax, enumerate_modes, error_model,
                     geodetic_to_ecef, pl_solve, stat_distributions,
                     thresholds)
from jkaraim.model_core import AXIS_UP, elevation_azimuth
from jkaraim.sim import propagate


def epoch_case(lat, lon, t, flavor):
    budget = IntegrityBudget(p_const=0.0)
    table = default_table()
    user = geodetic_to_ecef(lat, lon)
    vis = []
    for alm in default_almanac(("GPS",)):
        pos = propagate(alm, t)
        el, _ = elevation_azimuth(user, pos)
        if el > 5.0:
            vis.append((alm, pos, el))
    models = [error_model(a.svn, el, table, flavor, b_nom=budget.b_nom)
              for a, _, el in vis]
    sigmas = np.array([m.acc_sigma for m in models])
    geom = assemble_geometry(user, [(p, a.constellation)
                                    for a, p, _ in vis],
                             weights=1.0 / sigmas ** 2,
                             sat_ids=[a.svn for a, _, _ in vis])
    k_max, _ = determine_kmax([geom.n], budget.p_sat, budget.p_const,
                              budget.p_thres)
    tm = enumerate_modes(geom.n, k_max, {"GPS": range(geom.n)},
                         budget.p_sat, budget.p_const)
    return geom, models, sigmas, tm, budget


def jk_vpl(geom, models, sigmas, tm, budget):
    ops = SolutionOps(geom)
    acc = [m.acc_bound for m in models]
    dists, _ = stat_distributions(geom, ops, tm, acc)
    thresh = thresholds(tm, dists, budget.c_req_fa_total)
    bounds = [m.int_bound for m in models]
    return pl_solve(geom, tm, bounds, thresh, budget, axis=AXIS_UP,
                    ops=ops, gaussian_sigmas=sigmas)


lat, lon, t = 34.0, -118.0, 36000.0
print(f"user at ({lat}, {lon}), epoch t={t:.0f} s\n")

geom, models, sigmas, tm, budget = epoch_case(lat, lon, t, "gaussian")
print(f"{geom.n} satellites, {tm.n_fault_modes} fault modes")

base = baseline_araim_pl(geom, tm, sigmas, budget, axes=(AXIS_UP,)).vpl
print(f"\nsolution-separation benchmark VPL: {base:7.2f} m")

vpl_g = jk_vpl(geom, models, sigmas, tm, budget)
print(f"jackknife VPL, Gaussian bounds:    {vpl_g:7.2f} m "
      f"({100 * (vpl_g - base) / base:+.1f}% vs benchmark)")

geom, models, sigmas, tm, budget = epoch_case(lat, lon, t, "pgo")
vpl_p = jk_vpl(geom, models, sigmas, tm, budget)
print(f"jackknife VPL, PGO bounds:         {vpl_p:7.2f} m "
      f"({100 * (vpl_p - vpl_g) / vpl_g:+.1f}% vs Gaussian bounds)")
