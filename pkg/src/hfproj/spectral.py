"""Channel eigensolves, the spectral-projection map and projection distances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import (
    WINDOW_TOL,
    Configuration,
    GapViolationError,
    HFProjError,
    RadialGrid,
    SpectralWindow,
    build_window,
)
from .operators import (
    ChannelOperator,
    DensityState,
    _band_matvec,
    fock_channel,
    kinetic_nuclear_matrix,
)

__all__ = [
    "EigensolverError",
    "Eigenpairs",
    "channel_eigensolve",
    "lowest_eigenvalue",
    "ChannelSpectrum",
    "projection_step",
    "spectral_projection_map",
    "ProjectionDistance",
    "distances",
    "ProjectionBoundReport",
    "projection_bound_check",
    "hydrogenic_state",
    "random_state",
]


class EigensolverError(HFProjError):
    """The dense eigensolver failed to converge."""


@dataclass(frozen=True, eq=False)
class Eigenpairs:
    """Ascending eigenvalues with eigenvectors stored as rows.

    For a :class:`ChannelOperator` the rows are nodal radial orbitals
    normalized in the grid quadrature; for a plain matrix they are ordinary
    unit vectors.  ``residual`` is ``max_i ||H v_i - λ_i v_i|| / ||H||``.
    """

    values: np.ndarray
    vectors: np.ndarray
    residual: float

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(zip(self.values, self.vectors))


def _fix_sign(vectors: np.ndarray) -> np.ndarray:
    # first lobe positive: radial solutions start like +r^(l+1)
    for row in vectors:
        big = np.abs(row) > 1e-3 * np.max(np.abs(row))
        if row[np.argmax(big)] < 0:
            row *= -1.0
    return vectors


def _dense_eigensolve(matrix: np.ndarray, how_many: int) -> Eigenpairs:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-12 * max(1.0, np.max(np.abs(a)))):
        raise ValueError("matrix is not symmetric")
    n = a.shape[0]
    k = min(how_many, n)
    try:
        vals, vecs = linalg.eigh(a, subset_by_index=[0, k - 1])
    except linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc
    scale = max(np.linalg.norm(a, 2), np.finfo(float).tiny)
    res = np.linalg.norm(a @ vecs - vecs * vals, axis=0).max() / scale
    return Eigenpairs(vals, vecs.T.copy(), float(res))


def channel_eigensolve(op, how_many: int, *, shift: float = 2.0) -> Eigenpairs:
    """Lowest ``how_many`` eigenpairs of a channel operator (or symmetric matrix).

    Banded operators go through the banded symmetric solver.  Operators with
    a dense part are solved as the generalized problem
    ``B y = μ (M + s B) y`` with ``E = 1/μ - s``; the shift ``s`` is raised
    until ``M + s B`` is positive definite.
    """
    if how_many < 1:
        raise ValueError("how_many must be positive")
    if not isinstance(op, ChannelOperator):
        return _dense_eigensolve(op, how_many)

    grid = op.grid
    n = grid.count
    k = min(how_many, n)
    if op.is_banded:
        try:
            vals = linalg.eig_banded(
                op.symmetric_band(), eigvals_only=True, select="i", select_range=(0, k - 1)
            )
        except linalg.LinAlgError as exc:
            raise EigensolverError(str(exc)) from exc
        return _banded_vectors(op, vals)

    m = op.y_matrix()
    b = grid.jacobian**2
    s = float(shift)
    for _ in range(12):
        shifted = m + np.diag(s * b)
        try:
            mu, y = linalg.eigh(np.diag(b), shifted, subset_by_index=[n - k, n - 1])
            break
        except linalg.LinAlgError:
            s *= 4.0
    else:
        raise EigensolverError("could not find a positive definite shift")
    mu, y = mu[::-1], y[:, ::-1]
    vals = 1.0 / mu - s
    y = y / np.sqrt(np.einsum("i,ij,ij->j", b, y, y))
    scale = np.abs(m).sum(axis=0).max()
    res = np.linalg.norm(m @ y - (b[:, None] * y) * vals, axis=0).max() / scale
    u = y * np.sqrt(grid.jacobian / grid.step)[:, None]
    return Eigenpairs(vals, _fix_sign(u.T.copy()), float(res))


def _banded_vectors(op: ChannelOperator, values: np.ndarray) -> Eigenpairs:
    # inverse iteration on the y-form pencil (M, diag(g'^2)); forming the full
    # eigenvector basis of a banded matrix would cost O(n^3)
    grid = op.grid
    b = grid.jacobian**2
    p, n = op.band.shape[0] - 1, grid.count
    full = np.zeros((2 * p + 1, n))
    full[: p + 1] = op.band
    for d in range(1, p + 1):
        full[p + d, : n - d] = op.band[p - d, d:]
    seed = np.random.default_rng(12345).standard_normal(n)
    vals, ys = [], []
    for e in values:
        shifted = full.copy()
        shifted[p] -= e * b
        y = seed.copy()
        for _ in range(3):
            y = linalg.solve_banded((p, p), shifted, b * y, check_finite=False)
            for prev in ys:
                y -= (prev @ (b * y)) * prev
            y /= math.sqrt(y @ (b * y))
        vals.append(float(y @ _band_matvec(op.band, y)))
        ys.append(y)
    y = np.column_stack(ys)
    vals = np.array(vals)
    m_y = np.column_stack([_band_matvec(op.band, col) for col in y.T])
    scale = np.abs(op.band).sum(axis=0).max() * 2
    res = np.linalg.norm(m_y - (b[:, None] * y) * vals, axis=0).max() / scale
    u = y * np.sqrt(grid.jacobian / grid.step)[:, None]
    return Eigenpairs(vals, _fix_sign(u.T.copy()), float(res))


def lowest_eigenvalue(op) -> float:
    return float(channel_eigensolve(op, 1).values[0])


# ---------------------------------------------------------------------------
# the map


@dataclass(frozen=True)
class ChannelSpectrum:
    """Eigenvalues computed in one channel and which of them were selected."""

    ell: int
    values: tuple[float, ...]
    selected: tuple[int, ...]
    labels: tuple[int, ...]


def _channel_plan(config: Configuration) -> dict[int, list[int]]:
    return config.channel_shells()


def projection_step(
    config: Configuration,
    state: DensityState,
    window: SpectralWindow | None = None,
) -> tuple[DensityState, list[ChannelSpectrum]]:
    """Apply ``P -> χ_Ω(H_P)`` and return the image with per-channel spectra."""
    window = window or build_window(config)
    if state.spin_factor != config.spin_factor:
        raise ValueError(
            f"state spin factor {state.spin_factor} does not match configuration ({config.spin_factor})"
        )
    top = max(window.levels)
    level_index = {n: i for i, n in enumerate(window.levels)}
    orbitals, energies, labels, spectra = {}, {}, {}, []
    for ell, shells in _channel_plan(config).items():
        op = fock_channel(config, state, ell)
        count = top - ell + 1
        pairs = channel_eigensolve(op, count)
        picked, tags = [], []
        for n in shells:
            a, b = window.intervals[level_index[n]]
            inside = [i for i, e in enumerate(pairs.values) if a - WINDOW_TOL <= e <= b + WINDOW_TOL]
            if len(inside) != 1:
                raise GapViolationError(
                    f"channel l={ell}: {len(inside)} eigenvalues in window [{a:.6g}, {b:.6g}] "
                    f"for shell n={n} (expected 1); eigenvalues {np.round(pairs.values, 6).tolist()}"
                )
            picked.append(inside[0])
            tags.append(n)
        if not config.restricted:
            in_omega = [i for i, e in enumerate(pairs.values) if window.contains(e)]
            if sorted(in_omega) != sorted(picked):
                raise GapViolationError(
                    f"channel l={ell}: {len(in_omega)} eigenvalues in Ω, expected {len(picked)}"
                )
        orbitals[ell] = pairs.vectors[picked]
        energies[ell] = pairs.values[picked]
        labels[ell] = tags
        spectra.append(ChannelSpectrum(ell, tuple(map(float, pairs.values)), tuple(picked), tuple(tags)))
    new = DensityState.from_orbitals(
        state.grid, orbitals, config.spin_factor, labels=labels, energies=energies
    )
    return new, spectra


def spectral_projection_map(config: Configuration, state: DensityState) -> DensityState:
    """The fixed-point map ``F(P) = χ_Ω(H_P)`` (with ``π_ℓ`` selection when restricted)."""
    return projection_step(config, state)[0]


# ---------------------------------------------------------------------------
# distances


@dataclass(frozen=True)
class ProjectionDistance:
    """Multiplicity-weighted Hilbert-Schmidt and trace distances."""

    hs: float
    trace: float


def _channel_difference(p: DensityState, q: DensityState, ell: int) -> np.ndarray:
    za, fa = p.channel_projector(ell)
    zb, fb = q.channel_projector(ell)
    if za.shape[1] + zb.shape[1] == 0:
        return np.zeros((0, 0))
    basis, _ = np.linalg.qr(np.hstack([za, zb]))
    ca, cb = basis.T @ za, basis.T @ zb
    d = (ca * fa) @ ca.T - (cb * fb) @ cb.T
    return 0.5 * (d + d.T)


def distances(p: DensityState, q: DensityState) -> ProjectionDistance:
    """Distances of the density operators induced by two states."""
    if p.spin_factor != q.spin_factor or not p.grid.same_as(q.grid):
        raise ValueError("states have different grids or spin factors")
    hs2 = tr = 0.0
    for ell in sorted(set(p.channels) | set(q.channels)):
        d = _channel_difference(p, q, ell)
        if d.size == 0:
            continue
        mult = (2 * ell + 1) * p.spin_factor
        ev = np.linalg.eigvalsh(d)
        hs2 += mult * float(np.sum(ev**2))
        tr += mult * float(np.sum(np.abs(ev)))
    return ProjectionDistance(math.sqrt(hs2), tr)


# ---------------------------------------------------------------------------
# abstract projection comparison


@dataclass(frozen=True)
class ProjectionBoundReport:
    """``lhs = ||χ(A) - χ(B)||_2`` against the gap bound ``rhs``."""

    lhs: float
    rhs: float
    delta: float
    passed: bool
    slack: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def _as_intervals(window) -> list[tuple[float, float]]:
    if isinstance(window, SpectralWindow):
        return list(window.intervals)
    arr = np.asarray(window, dtype=float)
    if arr.ndim == 1:
        return [tuple(arr)]
    return [tuple(row) for row in arr]


def _inside(values, intervals, tol):
    mask = np.zeros(len(values), dtype=bool)
    for a, b in intervals:
        mask |= (values >= a - tol) & (values <= b + tol)
    return mask


def projection_bound_check(
    a, b, window, delta: float | None = None, *, slack: float = 1e-12, tol: float = WINDOW_TOL
) -> ProjectionBoundReport:
    """Compare spectral projections of two symmetric matrices on a window.

    The gap ``delta`` defaults to the smaller of the two cross distances
    ``dist(σ(A)∩Ω, σ(B)\\Ω)`` and ``dist(σ(B)∩Ω, σ(A)\\Ω)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("A and B must be square matrices of the same size")
    intervals = _as_intervals(window)
    ea, va = np.linalg.eigh(a)
    eb, vb = np.linalg.eigh(b)
    ia, ib = _inside(ea, intervals, tol), _inside(eb, intervals, tol)

    def gap(x, y):
        if x.size == 0 or y.size == 0:
            return math.inf
        return float(np.min(np.abs(x[:, None] - y[None, :])))

    computed = min(gap(ea[ia], eb[~ib]), gap(eb[ib], ea[~ia]))
    if delta is None:
        delta = computed
    if not delta > 0:
        raise ValueError(f"spectral gap must be positive, got {delta!r}")
    pa = va[:, ia] @ va[:, ia].T
    pb = vb[:, ib] @ vb[:, ib].T
    lhs = float(np.linalg.norm(pa - pb))
    diff = a - b
    num = math.sqrt(np.linalg.norm(diff @ pa) ** 2 + np.linalg.norm(diff @ pb) ** 2)
    rhs = 0.0 if num == 0 else num / delta
    return ProjectionBoundReport(lhs, rhs, float(delta), lhs <= rhs + slack, slack)


# ---------------------------------------------------------------------------
# reference states


def hydrogenic_state(config: Configuration, grid: RadialGrid) -> DensityState:
    """The interaction-free projection ``P_∞`` onto the occupied hydrogenic levels."""
    orbitals, energies, labels = {}, {}, {}
    for ell, shells in config.channel_shells().items():
        pairs = channel_eigensolve(kinetic_nuclear_matrix(grid, ell), max(shells) - ell)
        idx = [n - ell - 1 for n in shells]
        orbitals[ell] = pairs.vectors[idx]
        energies[ell] = pairs.values[idx]
        labels[ell] = list(shells)
    return DensityState.from_orbitals(grid, orbitals, config.spin_factor, labels=labels, energies=energies)


def random_state(config: Configuration, grid: RadialGrid, rng: np.random.Generator) -> DensityState:
    """Random admissible projection with the configuration's channel counts.

    Each channel gets a random orthonormal frame inside the span of its
    lowest ``3 * count`` hydrogenic eigenvectors.
    """
    orbitals = {}
    for ell, shells in config.channel_shells().items():
        m = len(shells)
        pairs = channel_eigensolve(kinetic_nuclear_matrix(grid, ell), 3 * m)
        coeff, _ = np.linalg.qr(rng.standard_normal((pairs.vectors.shape[0], m)))
        orbitals[ell] = coeff.T @ pairs.vectors
    return DensityState.from_orbitals(grid, orbitals, config.spin_factor)
