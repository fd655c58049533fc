"""Grid, hydrogenic spectrum, and the Coulomb oracle.

Run with ``python demos/01_grid_and_oracle.py``.
"""

# %% The default log-linear grid resolves the cusp at the nucleus and the
# slowly decaying tail with the same number of points.
from hfproj import build_grid
from hfproj.operators import kinetic_nuclear_matrix
from hfproj.oracle import ExponentialShape, coulomb_kernel, coulomb_oracle
from hfproj.spectral import channel_eigensolve

grid = build_grid()
print(f"{grid.count} points from r = {grid.points[0]:.1e} to {grid.points[-1]:.0f}")

# %% In rescaled units the bare operator -Δ - 2/r has levels -1/n^2.
for ell, count in ((0, 3), (1, 2), (2, 1)):
    values = channel_eigensolve(kinetic_nuclear_matrix(grid, ell), count).values
    exact = [-1.0 / (ell + 1 + i) ** 2 for i in range(count)]
    for v, e in zip(values, exact):
        print(f"l={ell}  computed {v:+.12f}  exact {e:+.12f}  rel err {abs(v - e) / abs(e):.1e}")

# %% Direct and exchange interaction of one orbital with a filled subshell,
# first by brute force (nested Gauss-Legendre plus sphere quadrature) and
# then with the Poisson solver and angular weights used by the SCF code.
pairs = [
    ((0, ExponentialShape(0, 0, 1.0)), (0, ExponentialShape(0, 0, 1.0))),
    ((0, ExponentialShape(0, 1, 0.7)), (1, ExponentialShape(1, 0, 1.5))),
    ((1, ExponentialShape(1, 2, 0.8)), (1, ExponentialShape(1, 0, 2.0))),
]
print()
print(f"{'pair':>10} {'oracle J':>14} {'kernel J':>14} {'oracle K':>14} {'kernel K':>14}")
for a, b in pairs:
    res = coulomb_oracle(a, b)
    direct, exchange = coulomb_kernel(a, b, grid)
    print(f"{a[0]}-{b[0]:<8} {res.direct:14.10f} {direct:14.10f} {res.exchange:14.10f} {exchange:14.10f}")

# %% The first row is the classic 1s-1s value 5/4.
print(f"\n1s-1s direct integral minus 5/4: {coulomb_oracle(*pairs[0]).direct - 1.25:.1e}")
