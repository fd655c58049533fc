"""Restricted and unrestricted minimization of the N-electron Hartree functional.

Energies here are in ordinary Rydberg units with nuclear attraction
``-2Z/|x|``; divide by ``Z**2`` to compare with the rescaled quantities used
elsewhere in the package.  All orbitals are radial (s-type).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import RadialGrid, build_grid
from .operators import hartree_energy, hartree_potential, kinetic_nuclear_matrix, local_operator
from .spectral import channel_eigensolve

__all__ = [
    "HARTREE_GRID",
    "hartree_grid",
    "hydrogenic_orbital",
    "HartreeSolution",
    "restricted_minimize",
    "unrestricted_minimize",
    "default_starts",
    "SegregationRow",
    "segregation_scan",
]

# wide enough for the diffuse orbital of a nearly neutral two-electron ion
HARTREE_GRID = {"scheme": "log-linear", "r_max": 400.0, "count": 1500, "transition": 4.0}
SYMMETRY_TOL = 1e-6


def hartree_grid() -> RadialGrid:
    return build_grid(**HARTREE_GRID)


def hydrogenic_orbital(grid: RadialGrid, zeta: float, ell: int = 0) -> np.ndarray:
    """Normalized ``r^(l+1) exp(-zeta r)`` on the grid."""
    r = grid.points
    u = r ** (ell + 1) * np.exp(-zeta * r)
    return u / grid.norm(u)


@dataclass
class HartreeSolution:
    """A (local) minimizer of the Hartree functional.

    Attributes
    ----------
    orbitals : list of ndarray
        Normalized radial orbitals ``u_k`` (one per electron).
    energy : float
        Value of the functional in Rydberg units.
    symmetric : bool
        All orbitals agree pairwise to ``SYMMETRY_TOL`` in ``L²``.
    spread : float
        Largest pairwise ``L²`` distance between orbitals.
    branches : list
        For unrestricted runs, the result of every start as
        ``(label, energy, symmetric, converged)``.
    """

    orbitals: list
    energy: float
    symmetric: bool
    z: float
    converged: bool
    iterations: int
    grid: RadialGrid = field(repr=False)
    spread: float = 0.0
    residual: float = 0.0
    branches: list = field(default_factory=list)

    @property
    def rescaled_energy(self) -> float:
        return self.energy / self.z**2


def _spread(grid: RadialGrid, orbitals) -> float:
    out = 0.0
    for i in range(len(orbitals)):
        for k in range(i + 1, len(orbitals)):
            out = max(out, grid.norm(orbitals[i] - orbitals[k]))
    return out


def _ground(grid: RadialGrid, z: float, potential) -> tuple[float, np.ndarray]:
    op = kinetic_nuclear_matrix(grid, 0, charge=z)
    if potential is not None:
        op = op + local_operator(grid, 0, potential)
    pairs = channel_eigensolve(op, 1)
    return float(pairs.values[0]), pairs.vectors[0]


def restricted_minimize(
    n_electrons: int,
    z: float,
    tol: float = 1e-10,
    *,
    grid: RadialGrid | None = None,
    damping: float = 0.3,
    max_iter: int = 500,
) -> HartreeSolution:
    """Minimize ``φ -> E^H(φ, ..., φ)`` by damped self-consistent iteration.

    Each step takes the positive ground state of ``-Δ - 2Z/r + (N-1) U``,
    where ``U`` is the direct potential of the damped density.
    """
    if not z > 0:
        raise ValueError(f"z must be positive, got {z!r}")
    grid = grid or hartree_grid()
    phi = hydrogenic_orbital(grid, max(z - 5.0 / 16.0, 0.25 * z))
    rho = phi**2
    converged = False
    change = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        pot = None if n_electrons == 1 else (n_electrons - 1) * hartree_potential(rho, grid)
        _, new = _ground(grid, z, pot)
        change = grid.norm(new - phi)
        phi = new
        if change <= tol:
            converged = True
            break
        rho = (1 - damping) * new**2 + damping * rho
    energy = hartree_energy(z, [phi] * n_electrons, grid)
    return HartreeSolution([phi] * n_electrons, energy, True, z, converged, it, grid, 0.0, change)


def default_starts(n_electrons: int, z: float) -> list[tuple[str, list[float]]]:
    """Screening exponents for the starting orbitals, symmetric and segregated."""
    screened = max(z - 5.0 / 16.0, 0.25 * z)
    diffuse = max(z - (n_electrons - 1), 0.02)
    starts = [
        ("symmetric-bare", [z] * n_electrons),
        ("symmetric-screened", [screened] * n_electrons),
        ("segregated", [z] + [diffuse] * (n_electrons - 1)),
        ("segregated-reversed", [diffuse] * (n_electrons - 1) + [z]),
        ("spread", [z * (0.5 + 1.5 * k / max(n_electrons - 1, 1)) for k in range(n_electrons)]),
    ]
    return starts


def _coordinate_descent(grid, z, orbitals, tol, max_iter):
    # each update exactly minimizes the functional in one orbital, so the
    # energy decreases monotonically
    n = len(orbitals)
    pots = [hartree_potential(u * u, grid) for u in orbitals]
    change = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        change = 0.0
        for k in range(n):
            others = sum((pots[j] for j in range(n) if j != k), np.zeros(grid.count))
            _, new = _ground(grid, z, others if n > 1 else None)
            change = max(change, grid.norm(new - orbitals[k]))
            orbitals[k] = new
            pots[k] = hartree_potential(new * new, grid)
        if change <= tol:
            return orbitals, True, it, change
    return orbitals, False, it, change


def unrestricted_minimize(
    n_electrons: int,
    z: float,
    starts=None,
    tol: float = 1e-10,
    *,
    grid: RadialGrid | None = None,
    max_iter: int = 2000,
) -> HartreeSolution:
    """Minimize the Hartree functional over independent radial orbitals.

    ``starts`` is a list of ``(label, zetas)`` with one exponent per electron
    (see :func:`default_starts`).  Every start is relaxed by orbital-wise
    coordinate descent; the lowest converged energy wins.
    """
    if not z > 0:
        raise ValueError(f"z must be positive, got {z!r}")
    grid = grid or hartree_grid()
    starts = starts or default_starts(n_electrons, z)
    best = None
    branches = []
    for label, zetas in starts:
        if len(zetas) != n_electrons:
            raise ValueError(f"start {label!r} has {len(zetas)} orbitals, expected {n_electrons}")
        orbitals = [hydrogenic_orbital(grid, zeta) for zeta in zetas]
        orbitals, converged, its, change = _coordinate_descent(grid, z, orbitals, tol, max_iter)
        energy = hartree_energy(z, orbitals, grid)
        spread = _spread(grid, orbitals)
        sol = HartreeSolution(
            orbitals, energy, spread < SYMMETRY_TOL, z, converged, its, grid, spread, change
        )
        branches.append(
            {"label": label, "energy": energy, "symmetric": sol.symmetric, "spread": spread, "converged": converged}
        )
        if best is None or (converged, -energy) > (best.converged, -best.energy):
            best = sol
    best.branches = branches
    return best


@dataclass(frozen=True)
class SegregationRow:
    z: float
    restricted: float
    unrestricted: float
    gap: float
    segregated: bool
    converged: bool

    def as_dict(self) -> dict:
        return {
            "z": self.z,
            "restricted_energy": self.restricted,
            "unrestricted_energy": self.unrestricted,
            "gap": self.gap,
            "segregated": self.segregated,
            "converged": self.converged,
        }


def segregation_scan(
    z_values, n_electrons: int = 2, *, grid: RadialGrid | None = None, tol: float = 1e-10
) -> list[SegregationRow]:
    """Restricted against best unrestricted Hartree energy for each Z."""
    grid = grid or hartree_grid()
    rows = []
    for z in z_values:
        z = float(z)
        res = restricted_minimize(n_electrons, z, tol, grid=grid)
        unres = unrestricted_minimize(n_electrons, z, tol=tol, grid=grid)
        gap = res.energy - unres.energy
        rows.append(
            SegregationRow(
                z, res.energy, unres.energy, gap, (not unres.symmetric) and gap > 1e-8, res.converged and unres.converged
            )
        )
    return rows
