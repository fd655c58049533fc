"""Two-electron Hartree minimization: symmetric at large Z, segregated near Z = 1.

Run with ``python demos/04_hartree_segregation.py`` (about 10 s).
"""

# %% At Z = 35 every start, including a deliberately segregated one,
# relaxes to two identical orbitals.
from hfproj.hartree import hartree_grid, restricted_minimize, unrestricted_minimize

grid = hartree_grid()
big = unrestricted_minimize(2, 35.0, grid=grid)
for branch in big.branches:
    print(f"Z=35 {branch['label']:20s} E/Z^2 = {branch['energy'] / 35**2:+.10f} symmetric={branch['symmetric']}")

# %% Just above Z = 1 the picture changes.  The restricted minimum stays
# above -Z^2, while letting the orbitals differ lets one electron sit in a
# compact hydrogen-like orbital and the other drift far out.
z = 1.02
res = restricted_minimize(2, z, grid=grid)
unres = unrestricted_minimize(2, z, grid=grid)
print(f"\nZ={z}: restricted E = {res.energy:.6f}, unrestricted E = {unres.energy:.6f}, -Z^2 = {-z * z:.6f}")
r = grid.points
for k, u in enumerate(unres.orbitals, 1):
    print(f"orbital {k}: <r> = {grid.integrate(r * u * u):8.3f}")
print(f"restricted orbital: <r> = {grid.integrate(r * res.orbitals[0] ** 2):8.3f}")
