"""Channel-reduced Fock operators and the Hartree-Fock / Hartree energies.

Radial functions are stored by their nodal values ``u(r_i)`` where
``phi(x) = u(|x|)/|x| Y_lm(x)``; the radial inner product is the grid
quadrature ``sum(w * u * v)``.

Every operator is held in a "y-form": with ``y = sqrt(h/g') u`` the quadratic
form ``<u, H u>`` equals ``y @ M @ y`` and ``<u, u>`` equals
``y @ diag(g'**2) @ y``.  Entries of ``M`` are of order ``1/h**2`` across the
whole grid even though the radii span ten decades, which is what keeps the
eigenproblems well conditioned.  The plainly symmetric matrix that acts on
``z = sqrt(w) u`` is available as :attr:`ChannelOperator.matrix`.

Second derivatives use the eighth-order central stencil in the uniform
variable ``x``.  Dirichlet conditions sit at the ghost nodes next to each end
of the grid and are imposed by odd reflection, which keeps the matrix
symmetric and the closure high order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .core import Configuration, RadialGrid, SymmetryError

__all__ = [
    "STENCIL_HALF_WIDTH",
    "stencil_coefficients",
    "ChannelOperator",
    "local_operator",
    "kernel_operator",
    "kinetic_nuclear_matrix",
    "laplacian_matrix",
    "slater_kernel",
    "slater_potential",
    "RadialDensity",
    "hartree_potential",
    "angular_weight",
    "exchange_multipoles",
    "Channel",
    "DensityState",
    "exchange_apply",
    "exchange_operator",
    "direct_operator",
    "fock_channel",
    "EnergyBreakdown",
    "hf_energy_terms",
    "hf_energy",
    "hartree_energy",
]

STENCIL_HALF_WIDTH = 4


@lru_cache(maxsize=None)
def _stencil(p: int) -> tuple[float, ...]:
    coeffs = [0.0] * (2 * p + 1)
    for m in range(1, p + 1):
        c = 2.0 * (-1) ** (m + 1) * math.factorial(p) ** 2 / (
            m * m * math.factorial(p - m) * math.factorial(p + m)
        )
        coeffs[p + m] = coeffs[p - m] = c
    coeffs[p] = -2.0 * sum(coeffs[p + 1 :])
    return tuple(coeffs)


def stencil_coefficients(half_width: int = STENCIL_HALF_WIDTH) -> np.ndarray:
    """Central finite-difference weights for ``f''`` of order ``2 * half_width``."""
    return np.array(_stencil(int(half_width)))


def _neg_second_difference(n: int, h: float, p: int = STENCIL_HALF_WIDTH) -> np.ndarray:
    """Upper band (LAPACK layout) of ``-d²/dx²`` with odd reflection at both ghosts."""
    c = stencil_coefficients(p)
    ab = np.zeros((p + 1, n))
    for d in range(p + 1):
        ab[p - d, d:] = -c[p + d] / h**2
    # virtual node v maps to -(node 2n - v) past the outer ghost x_n,
    # and to -(node -2 - v) past the inner ghost x_{-1}
    for i in list(range(min(p, n))) + list(range(max(n - p, 0), n)):
        for m in range(-p, p + 1):
            v = i + m
            if v >= n + 1:
                j = 2 * n - v
            elif v <= -2:
                j = -2 - v
            else:
                continue
            if j >= i:
                ab[p - (j - i), j] += c[p + m] / h**2
    return ab


def _band_to_dense(ab: np.ndarray) -> np.ndarray:
    p, n = ab.shape[0] - 1, ab.shape[1]
    out = np.zeros((n, n))
    for d in range(p + 1):
        idx = np.arange(n - d)
        out[idx, idx + d] = ab[p - d, d:]
        out[idx + d, idx] = ab[p - d, d:]
    return out


def _band_matvec(ab: np.ndarray, y: np.ndarray) -> np.ndarray:
    p = ab.shape[0] - 1
    out = ab[p] * y
    for d in range(1, p + 1):
        diag = ab[p - d, d:]
        out[:-d] += diag * y[d:]
        out[d:] += diag * y[:-d]
    return out


# ---------------------------------------------------------------------------
# operators


@dataclass(eq=False)
class ChannelOperator:
    """A symmetric operator on radial functions of angular momentum ``ell``.

    Parameters
    ----------
    ell : int
        Angular momentum of the channel.
    grid : RadialGrid
        Grid the operator lives on.
    band : ndarray, shape (p + 1, n)
        Banded part of the y-form in LAPACK upper storage.
    dense : ndarray or None
        Optional dense (integral-kernel) part of the y-form.
    """

    ell: int
    grid: RadialGrid
    band: np.ndarray
    dense: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.grid.count

    @property
    def is_banded(self) -> bool:
        return self.dense is None

    def y_matrix(self) -> np.ndarray:
        """Dense y-form ``M``."""
        out = _band_to_dense(self.band)
        if self.dense is not None:
            out += self.dense
        return out

    @property
    def matrix(self) -> np.ndarray:
        """Symmetric matrix acting on ``z = sqrt(w) u``."""
        g = self.grid.jacobian
        return self.y_matrix() / np.outer(g, g)

    def symmetric_band(self) -> np.ndarray:
        """Band of :attr:`matrix` (valid only for purely banded operators)."""
        g = self.grid.jacobian
        p = self.band.shape[0] - 1
        out = self.band.copy()
        for d in range(p + 1):
            out[p - d, d:] /= g[: self.size - d] * g[d:]
        return out

    def _y_apply(self, y: np.ndarray) -> np.ndarray:
        out = _band_matvec(self.band, y)
        if self.dense is not None:
            out = out + self.dense @ y
        return out

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Nodal values of ``H u``, defined through ``<v, H u> = sum(w v (Hu))``."""
        g, h = self.grid.jacobian, self.grid.step
        y = np.sqrt(h / g) * np.asarray(u, dtype=float)
        return self._y_apply(y) / (math.sqrt(h) * g**1.5)

    def expectation(self, u: np.ndarray, v: np.ndarray | None = None) -> float:
        """Matrix element ``<v, H u>`` (``v`` defaults to ``u``)."""
        g, h = self.grid.jacobian, self.grid.step
        s = np.sqrt(h / g)
        yu = s * np.asarray(u, dtype=float)
        yv = yu if v is None else s * np.asarray(v, dtype=float)
        return float(yv @ self._y_apply(yu))

    # arithmetic -----------------------------------------------------------

    def _check(self, other: "ChannelOperator"):
        if other.ell != self.ell or not self.grid.same_as(other.grid):
            raise ValueError("operators live on different channels or grids")

    def __add__(self, other):
        if isinstance(other, ChannelOperator):
            self._check(other)
            p = max(self.band.shape[0], other.band.shape[0])
            band = _pad_band(self.band, p) + _pad_band(other.band, p)
            if self.dense is None:
                dense = other.dense
            elif other.dense is None:
                dense = self.dense
            else:
                dense = self.dense + other.dense
            return ChannelOperator(self.ell, self.grid, band, dense)
        if np.isscalar(other):
            band = self.band.copy()
            band[-1] += float(other) * self.grid.jacobian**2
            return ChannelOperator(self.ell, self.grid, band, self.dense)
        return NotImplemented

    __radd__ = __add__

    def __mul__(self, factor):
        if not np.isscalar(factor):
            return NotImplemented
        f = float(factor)
        dense = None if self.dense is None else f * self.dense
        return ChannelOperator(self.ell, self.grid, f * self.band, dense)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other


def _pad_band(ab: np.ndarray, rows: int) -> np.ndarray:
    if ab.shape[0] == rows:
        return ab
    out = np.zeros((rows, ab.shape[1]))
    out[rows - ab.shape[0] :] = ab
    return out


def local_operator(grid: RadialGrid, ell: int, potential) -> ChannelOperator:
    """Multiplication by the function ``potential(r)``."""
    band = np.zeros((1, grid.count))
    band[0] = grid.jacobian**2 * np.broadcast_to(np.asarray(potential, dtype=float), grid.count)
    return ChannelOperator(ell, grid, band)


def kernel_operator(grid: RadialGrid, ell: int, kernel: np.ndarray) -> ChannelOperator:
    """Integral operator ``(K u)(r_i) = sum_j kernel[i, j] u_j w_j``."""
    g32 = grid.jacobian**1.5
    dense = grid.step * (g32[:, None] * kernel * g32[None, :])
    return ChannelOperator(ell, grid, np.zeros((1, grid.count)), dense)


def laplacian_matrix(grid: RadialGrid, ell: int) -> ChannelOperator:
    """Radial part of ``-Δ`` in channel ``ell``: ``-d²/dr² + ell(ell+1)/r²``."""
    key = ("laplacian", ell)
    if key not in grid.cache:
        band = _neg_second_difference(grid.count, grid.step)
        band[-1] += grid.curvature + ell * (ell + 1) * (grid.jacobian / grid.points) ** 2
        band.setflags(write=False)
        grid.cache[key] = band
    return ChannelOperator(ell, grid, grid.cache[key].copy())


def kinetic_nuclear_matrix(grid: RadialGrid, ell: int, charge: float = 1.0) -> ChannelOperator:
    """``-d²/dr² + ell(ell+1)/r² - 2 charge/r`` with Dirichlet ends.

    With ``charge = 1`` this is the rescaled hydrogen operator whose channel
    eigenvalues are ``-1/n**2`` for ``n >= ell + 1``.
    """
    if ell < 0:
        raise ValueError(f"ell must be non-negative, got {ell}")
    op = laplacian_matrix(grid, ell)
    op.band[-1] -= 2.0 * charge * grid.jacobian**2 / grid.points
    return op


# ---------------------------------------------------------------------------
# Slater potentials


def _poisson_factor(grid: RadialGrid, k: int):
    key = ("poisson", k)
    if key not in grid.cache:
        band = _neg_second_difference(grid.count, grid.step)
        band[-1] += grid.curvature + k * (k + 1) * (grid.jacobian / grid.points) ** 2
        scale = np.sqrt(grid.jacobian / grid.step) / grid.points
        r, rg, rr = grid.points, grid.inner_ghost, grid.outer_ghost
        outer = r**k / rr ** (k + 0.5)
        if rg > 0:
            phi = (r ** (-k) - r ** (k + 1) / rr ** (2 * k + 1)) / r
            alpha = rg ** (k + 1) / (rg ** (-k) - rg ** (k + 1) / rr ** (2 * k + 1))
            inner = math.sqrt(alpha) * phi
        else:
            inner = np.zeros_like(r)
        grid.cache[key] = (cholesky_banded(band), scale, outer, inner)
    return grid.cache[key]


def slater_potential(grid: RadialGrid, k: int, values) -> np.ndarray:
    """``Y^k[f](r) = ∫ r_<^k / r_>^(k+1) f(s) ds`` for nodal values ``f``.

    The multipole integral is obtained from the radial Poisson equation for
    ``r Y^k`` with Dirichlet ends, plus the exact homogeneous corrections that
    turn those ends into regularity at the origin and decay at infinity.
    """
    chol, scale, outer, inner = _poisson_factor(grid, k)
    fw = np.asarray(values, dtype=float) * grid.weights
    y = (2 * k + 1) * scale * cho_solve_banded((chol, False), scale * fw)
    return y + outer * (outer @ fw) + inner * (inner @ fw)


def slater_kernel(grid: RadialGrid, k: int) -> np.ndarray:
    """Dense kernel ``G`` with ``Y^k[f] = G @ (f * weights)`` (cached on the grid)."""
    key = ("slater_kernel", k)
    if key not in grid.cache:
        chol, scale, outer, inner = _poisson_factor(grid, k)
        g = cho_solve_banded((chol, False), np.diag(scale))
        g *= (2 * k + 1) * scale[:, None]
        g += np.outer(outer, outer) + np.outer(inner, inner)
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        grid.cache[key] = g
    return grid.cache[key]


@dataclass(frozen=True, eq=False)
class RadialDensity:
    """Radial electron density ``ρ_w(r) = 4π r² ρ(r)`` so that ``∫ρ_w dr = N``."""

    grid: RadialGrid
    weight: np.ndarray

    @property
    def total(self) -> float:
        return self.grid.integrate(self.weight)


def hartree_potential(rho: RadialDensity | np.ndarray, grid: RadialGrid | None = None) -> np.ndarray:
    """Direct potential ``U = ρ * 2/|x|`` of a spherical density (Newton's theorem)."""
    if isinstance(rho, RadialDensity):
        grid = grid or rho.grid
        values = rho.weight
    else:
        values = rho
    if grid is None:
        raise ValueError("a grid is required for raw density arrays")
    return 2.0 * slater_potential(grid, 0, values)


# ---------------------------------------------------------------------------
# angular reduction


@lru_cache(maxsize=None)
def _gaunt_weight(ell: int, ell_b: int, k: int) -> float:
    from sympy.physics.wigner import wigner_3j

    c = wigner_3j(ell, k, ell_b, 0, 0, 0)
    return float((2 * ell_b + 1) * c * c)


def angular_weight(ell: int, ell_b: int, k: int) -> float:
    """Exchange weight of multipole ``k`` between channel ``ell`` and a filled ``ell_b`` subshell.

    Equals ``(2 ell_b + 1)`` times the squared 3j symbol with zero projections,
    i.e. the sum over the filled subshell of the squared angular coupling.
    """
    if abs(ell - ell_b) > k or k > ell + ell_b or (ell + ell_b + k) % 2:
        return 0.0
    return _gaunt_weight(ell, ell_b, k)


def exchange_multipoles(ell: int, ell_b: int) -> list[int]:
    """Multipoles allowed by the triangle and parity rules."""
    return [k for k in range(abs(ell - ell_b), ell + ell_b + 1) if (ell + ell_b + k) % 2 == 0]


def _weight(ell, ell_b, k):
    # resolved at call time so the table can be swapped out for sensitivity tests
    return globals()["angular_weight"](ell, ell_b, k)


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class Channel:
    """Occupied radial orbitals of one angular momentum.

    ``orbitals[i]`` is normalized in the grid quadrature and carries total
    occupancy ``occupancies[i]`` (all ``m`` and spins included).
    """

    ell: int
    orbitals: np.ndarray
    occupancies: np.ndarray
    energies: np.ndarray | None = None
    labels: tuple = ()

    @property
    def capacity(self) -> int:
        return 2 * self.ell + 1

    def __len__(self) -> int:
        return self.orbitals.shape[0]


@dataclass(frozen=True, eq=False)
class DensityState:
    """A rotation-invariant density operator, channel by channel.

    Parameters
    ----------
    grid : RadialGrid
    channels : dict[int, Channel]
    spin_factor : int
        ``q`` for the spin-summed unrestricted operator, 1 in restricted mode.
    mixed : bool
        Allow fractional occupancies (convex combinations of projections).
    """

    grid: RadialGrid
    channels: dict
    spin_factor: int = 1
    mixed: bool = False

    def __post_init__(self):
        for ell, ch in self.channels.items():
            if ch.ell != ell:
                raise ValueError(f"channel key {ell} does not match ell={ch.ell}")
            if ch.orbitals.ndim != 2 or ch.orbitals.shape[1] != self.grid.count:
                raise ValueError(f"orbitals in channel {ell} do not match the grid")
            full = ch.capacity * self.spin_factor
            occ = ch.occupancies
            if self.mixed:
                if np.any(occ < -1e-12) or np.any(occ > full * (1 + 1e-12)):
                    raise SymmetryError(f"channel {ell}: occupancies outside [0, {full}]")
            elif not np.allclose(occ, full, rtol=0, atol=1e-12):
                raise SymmetryError(
                    f"channel {ell}: occupancy {occ.tolist()} is not the filled value {full}; "
                    "partially filled m-subshells break rotation invariance"
                )

    @classmethod
    def from_orbitals(
        cls,
        grid: RadialGrid,
        orbitals: dict,
        spin_factor: int = 1,
        occupancies: dict | None = None,
        labels: dict | None = None,
        energies: dict | None = None,
        mixed: bool = False,
    ) -> "DensityState":
        """Build a state from ``{ell: [u_1, u_2, ...]}``; occupancies default to filled."""
        channels = {}
        for ell, us in sorted(orbitals.items()):
            arr = np.atleast_2d(np.asarray(us, dtype=float))
            if arr.shape[0] == 0:
                continue
            if occupancies and ell in occupancies:
                occ = np.asarray(occupancies[ell], dtype=float)
            else:
                occ = np.full(arr.shape[0], (2 * ell + 1) * spin_factor, dtype=float)
            en = None if not energies or ell not in energies else np.asarray(energies[ell], float)
            lab = tuple(labels[ell]) if labels and ell in labels else ()
            channels[ell] = Channel(ell, arr, occ, en, lab)
        return cls(grid, channels, spin_factor, mixed)

    @property
    def n_electrons(self) -> float:
        return float(sum(ch.occupancies.sum() for ch in self.channels.values()))

    def density(self) -> RadialDensity:
        rho = np.zeros(self.grid.count)
        for ch in self.channels.values():
            rho += ch.occupancies @ (ch.orbitals**2)
        return RadialDensity(self.grid, rho)

    def fractions(self, ell: int) -> np.ndarray:
        ch = self.channels[ell]
        return ch.occupancies / (ch.capacity * self.spin_factor)

    def orthonormality_error(self) -> float:
        err = 0.0
        w = self.grid.weights
        for ch in self.channels.values():
            gram = (ch.orbitals * w) @ ch.orbitals.T
            err = max(err, float(np.max(np.abs(gram - np.eye(len(ch))))))
        return err

    def channel_projector(self, ell: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(Z, f)``: z-form orbitals (columns) and fractional weights."""
        ch = self.channels.get(ell)
        if ch is None:
            return np.zeros((self.grid.count, 0)), np.zeros(0)
        return (ch.orbitals * np.sqrt(self.grid.weights)).T, self.fractions(ell)

    def blend(self, other: "DensityState", weight: float, tol: float = 1e-13) -> "DensityState":
        """Convex combination ``(1 - weight) * self + weight * other`` as a mixed state."""
        if self.spin_factor != other.spin_factor or not self.grid.same_as(other.grid):
            raise ValueError("cannot blend states with different structure")
        sqrt_w = np.sqrt(self.grid.weights)
        channels = {}
        for ell in sorted(set(self.channels) | set(other.channels)):
            za, fa = self.channel_projector(ell)
            zb, fb = other.channel_projector(ell)
            basis, _ = np.linalg.qr(np.hstack([za, zb]))
            ca, cb = basis.T @ za, basis.T @ zb
            mat = (1 - weight) * (ca * fa) @ ca.T + weight * (cb * fb) @ cb.T
            vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
            keep = vals > tol
            if not np.any(keep):
                continue
            vals = np.clip(vals[keep], 0.0, 1.0)
            orbitals = (basis @ vecs[:, keep]).T / sqrt_w
            full = (2 * ell + 1) * self.spin_factor
            order = np.argsort(-vals)
            channels[ell] = Channel(ell, orbitals[order], full * vals[order])
        return DensityState(self.grid, channels, self.spin_factor, mixed=True)


# ---------------------------------------------------------------------------
# Coulomb terms


def _check_grid(state: DensityState, grid: RadialGrid):
    if not state.grid.same_as(grid):
        raise ValueError("state and operator live on different grids")


def exchange_apply(state: DensityState, ell: int, u) -> np.ndarray:
    """Nodal values of ``K_P u`` for a radial function ``u`` in channel ``ell``.

    ``K_P u = sum_b f_b sum_k Λ_k(ell, ell_b) 2 Y^k[u_b u] u_b`` where ``f_b``
    is the filled fraction of subshell ``b``.  Exchange couples equal spins
    only, so no spin factor appears.
    """
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    for ell_b, ch in state.channels.items():
        fr = state.fractions(ell_b)
        for k in exchange_multipoles(ell, ell_b):
            lam = _weight(ell, ell_b, k)
            if lam == 0.0:
                continue
            for ub, f in zip(ch.orbitals, fr):
                out += 2.0 * lam * f * slater_potential(state.grid, k, ub * u) * ub
    return out


def exchange_operator(state: DensityState, ell: int) -> ChannelOperator:
    grid = state.grid
    g32 = grid.jacobian**1.5
    dense = np.zeros((grid.count, grid.count))
    for ell_b, ch in state.channels.items():
        fr = state.fractions(ell_b)
        for k in exchange_multipoles(ell, ell_b):
            lam = _weight(ell, ell_b, k)
            if lam == 0.0:
                continue
            gk = slater_kernel(grid, k)
            for ub, f in zip(ch.orbitals, fr):
                s = g32 * ub
                dense += (2.0 * lam * f * grid.step) * (s[:, None] * gk * s[None, :])
    return ChannelOperator(ell, grid, np.zeros((1, grid.count)), dense)


def direct_operator(state: DensityState, ell: int) -> ChannelOperator:
    return local_operator(state.grid, ell, hartree_potential(state.density()))


def fock_channel(
    config: Configuration, state: DensityState, ell: int, grid: RadialGrid | None = None
) -> ChannelOperator:
    """Channel block of ``H_P = -Δ - V + (U_P - K_P)/Z``.

    The density of ``state`` already includes the spin factor, so the
    direct term is ``q U_{P'}`` in the unrestricted spin-summed picture.
    """
    grid = grid or state.grid
    _check_grid(state, grid)
    op = kinetic_nuclear_matrix(grid, ell)
    if not state.channels or math.isinf(config.z):
        return op
    inv_z = 1.0 / config.z
    return op + inv_z * (direct_operator(state, ell) - exchange_operator(state, ell))


# ---------------------------------------------------------------------------
# energies


@dataclass(frozen=True)
class EnergyBreakdown:
    """One-body, direct and exchange parts of the Hartree-Fock energy.

    ``direct`` and ``exchange`` already carry the factor ``1/(2Z)``.
    """

    one_body: float
    direct: float
    exchange: float
    kinetic: float

    @property
    def interaction(self) -> float:
        return self.direct - self.exchange

    @property
    def total(self) -> float:
        return self.one_body + self.interaction


def _exchange_energy(state: DensityState) -> float:
    total = 0.0
    for ell, ch in state.channels.items():
        for u, occ in zip(ch.orbitals, ch.occupancies):
            total += occ * state.grid.inner(u, exchange_apply(state, ell, u))
    return total


def hf_energy_terms(config: Configuration, state: DensityState) -> EnergyBreakdown:
    grid = state.grid
    one_body = kinetic = 0.0
    for ell, ch in state.channels.items():
        h0 = kinetic_nuclear_matrix(grid, ell)
        t = laplacian_matrix(grid, ell)
        for u, occ in zip(ch.orbitals, ch.occupancies):
            one_body += occ * h0.expectation(u)
            kinetic += occ * t.expectation(u)
    if math.isinf(config.z) or not state.channels:
        return EnergyBreakdown(one_body, 0.0, 0.0, kinetic)
    rho = state.density()
    direct = grid.inner(rho.weight, hartree_potential(rho)) / (2 * config.z)
    exchange = _exchange_energy(state) / (2 * config.z)
    return EnergyBreakdown(one_body, direct, exchange, kinetic)


def hf_energy(config: Configuration, state: DensityState) -> float:
    """``tr[(-Δ-V)P] + (1/2Z) ∫∫ (ρ(x)ρ(y) - |τ(x,y)|²) V(x-y)``, rescaled units."""
    return hf_energy_terms(config, state).total


def hartree_energy(z: float, orbitals, grid: RadialGrid) -> float:
    """Unrestricted Hartree functional of radial s-orbitals in unscaled Rydberg units.

    ``sum_k <u_k, (-d²/dr² - 2Z/r) u_k> + 2 sum_{i<k} ∫∫ |φ_i|²|φ_k|²/|x-y|``.
    """
    us = [np.asarray(u, dtype=float) for u in orbitals]
    h0 = kinetic_nuclear_matrix(grid, 0, charge=z)
    energy = sum(h0.expectation(u) for u in us)
    potentials = [hartree_potential(u * u, grid) for u in us]
    for i in range(len(us)):
        for k in range(i + 1, len(us)):
            energy += grid.inner(us[k] ** 2, potentials[i])
    return float(energy)
