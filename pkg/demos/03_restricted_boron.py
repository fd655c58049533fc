"""Restricted Hartree-Fock for a boron-like ion with 1s, 2s and 2p subshells.

Run with ``python demos/03_restricted_boron.py``.
"""

# %% Five electrons at Z = 150: two 1s, two 2s and a fully occupied 2p
# subshell with its three projections counted through the channel weight.
from hfproj import Configuration
from hfproj.bounds import eigenvalue_sandwich, virial_check
from hfproj.fixedpoint import solve

cfg = Configuration(z=150, q=1, mode="restricted", shells=[(1, 0), (2, 0), (2, 1)])
state, report = solve(cfg)
print(f"converged={report.converged} after {report.iterations} iterations")
for lvl in report.levels:
    lo = -1 / lvl.n**2
    print(f"n={lvl.n} l={lvl.ell}  eps = {lvl.energy:+.8f}  in [{lo:+.4f}, {lo + 20 / 150:+.4f}]")

# %% The 2s/2p degeneracy of hydrogen is lifted by screening: 2s feels
# more of the nucleus and drops below 2p.
for ell, ch in state.channels.items():
    print(f"channel l={ell}: occupancies {list(map(float, ch.occupancies))}")

# %% Each Fock eigenvalue is squeezed between its hydrogenic value and an
# upper bound of order N/Z.
for rep in eigenvalue_sandwich(cfg, state, minimizer=True):
    print(f"{rep.name:28s} margin {rep.margin:.3e}  {'ok' if rep.passed else 'VIOLATED'}")
vir = virial_check(cfg, state, report.final_residual)
print(f"virial: relative deviation of kinetic trace from |E| = {vir.lhs:.2e}")
