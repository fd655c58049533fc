"""Helium-like ion at large nuclear charge: a contracting fixed-point map.

Run with ``python demos/02_helium_fixed_point.py`` (about 15 s).
"""

# %% Two electrons in the 1s shell at Z = 35.  The interaction enters with
# strength 1/Z, so the occupied level sits just above the hydrogenic -1.
from hfproj import Configuration, z_thresholds
from hfproj.fixedpoint import limit_study, lipschitz_estimate, solve, uniqueness_probe

cfg = Configuration(z=35, q=2, shells=[1])
gaps = z_thresholds(cfg)
print(f"gap delta = {gaps.delta:.4f}, critical charge for N=2: {gaps.z_critical}")

state, report = solve(cfg)
for i, rec in enumerate(report.iterates, 1):
    print(f"iter {i:2d}  residual {rec.residual:.3e}  energy {rec.energy:+.12f}")
(level,) = report.levels
print(f"1s eigenvalue {level.energy:.10f}, window [-1, {-1 + 8 / 35:.4f}]")

# %% Random starting densities all land on the same projection, and the
# map shrinks distances far more than the worst-case constant promises.
probe = uniqueness_probe(cfg, n_starts=5)
lip = lipschitz_estimate(cfg, n_pairs=6)
print(f"largest distance between solutions from 5 starts: {probe.max_distance:.1e}")
print(f"observed Lipschitz ratio {lip.max_ratio:.4f} against the bound {lip.theoretical:.3f}")

# %% As Z grows the solution approaches the hydrogenic projection like 1/Z.
study = limit_study(cfg, [50, 100, 200, 400, 800])
for row in study.rows:
    print(f"Z={row.z:5.0f}  ||P_Z - P_inf|| = {row.hs_distance:.4e}  bound {row.bound:.4f}")
print(f"log-log slope {study.slope:.4f}")
