import numpy as np
import pytest

from jkaraim.model_core import LinearModel


def random_geometry(rng, n=None, m=None, min_elev=5.0):
    """Random full-rank ENU geometry with unit clock columns.

    m = 4 gives one constellation, m = 5 two constellations.
    """
    if n is None:
        n = int(rng.integers(6, 15))
    if m is None:
        m = int(rng.integers(4, 6))
    n_const = m - 3
    while True:
        el = np.radians(rng.uniform(min_elev, 90.0, n))
        az = rng.uniform(0.0, 2 * np.pi, n)
        los = np.column_stack([np.cos(el) * np.sin(az),
                               np.cos(el) * np.cos(az),
                               np.sin(el)])
        tags = rng.integers(0, n_const, n)
        tags[:n_const] = np.arange(n_const)   # every clock observed
        G = np.zeros((n, m))
        G[:, :3] = los
        G[np.arange(n), 3 + tags] = 1.0
        if np.linalg.matrix_rank(G) == m:
            break
    w = rng.uniform(0.5, 4.0, n)
    consts = [f"C{t}" for t in tags]
    return LinearModel(G, w, np.zeros(n), [f"s{i}" for i in range(n)],
                       consts)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240824)


def gps_epoch_case(lat, lon, t, flavor="gaussian", budget=None,
                   constellations=("GPS",)):
    """Geometry, error models and threat model for one almanac epoch.

    Returns None when fewer satellites than states are visible.
    """
    from jkaraim import sim, threat
    from jkaraim.integrity import IntegrityBudget
    from jkaraim.model_core import assemble_geometry, geodetic_to_ecef
    from jkaraim.overbound import default_table

    if budget is None:
        budget = IntegrityBudget(
            p_const=0.0 if len(constellations) == 1 else 1e-4)
    table = default_table()
    almanac = sim.default_almanac(constellations)
    user = geodetic_to_ecef(lat, lon)
    vis = sim._visible_sats(almanac, user, t, 5.0, constellations)
    models = [sim.error_model(a.svn, el, table, flavor,
                              b_nom=budget.b_nom)
              for a, _, el in vis]
    sigmas = np.array([m.acc_sigma for m in models])
    try:
        geom = assemble_geometry(
            user, [(pos, a.constellation) for a, pos, _ in vis],
            mask_angle=5.0, weights=1.0 / sigmas ** 2,
            sat_ids=[a.svn for a, _, _ in vis])
    except Exception:
        return None
    parts = {}
    for i, (a, _, _) in enumerate(vis):
        parts.setdefault(a.constellation, []).append(i)
    k_max, _ = threat.determine_kmax(
        [len(v) for v in parts.values()], budget.p_sat, budget.p_const,
        budget.p_thres)
    tm = threat.enumerate_modes(geom.n, k_max, parts, budget.p_sat,
                                budget.p_const)
    return geom, models, sigmas, tm, budget
