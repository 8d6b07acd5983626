"""Coarse worldwide availability comparison.

Runs the gridded-user scenario at a desk-friendly resolution for both
bound flavors of the jackknife algorithm and prints coverage at the
usual availability levels plus the Stanford-class tallies. Takes a few
minutes; shrink the grid or the day further for a quicker look.

Run:  python demos/worldwide_availability.py
"""

import numpy as np

from jkaraim import ScenarioConfig, aggregate, run_scenario

results = {}
for flavor in ("gaussian", "pgo"):
    config = ScenarioConfig(grid_step_deg=45.0, epoch_step_s=7200.0,
                            constellations=("GPS", "GAL"), flavor=flavor,
                            seed=1)
    print(f"running {flavor}: {len(config.grid())} locations x "
          f"{len(config.epochs())} epochs ...")
    records = run_scenario(config)
    results[flavor] = (records, aggregate(records, val=config.val))

print(f"\n{'':>12} {'gaussian':>10} {'pgo':>10}")
for level in (0.75, 0.95, 0.995):
    row = [results[f][1]["coverage"][level]["weighted"]
           for f in ("gaussian", "pgo")]
    print(f"coverage@{level:<5} {row[0]:10.3f} {row[1]:10.3f}")

for flavor in ("gaussian", "pgo"):
    records, stats = results[flavor]
    vpls = [r.vpl for r in records if np.isfinite(r.vpl)]
    print(f"\n{flavor}: median VPL {np.median(vpls):.1f} m, "
          f"Stanford counts {stats['stanford_counts']}")
