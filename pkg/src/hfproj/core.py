"""Radial grids, shell configurations, spectral windows and Z thresholds.

All lengths and energies are in the rescaled atomic units in which the
one-electron operator is ``-Δ - 2/|x|`` and the hydrogenic levels sit at
``-1/n**2``.  The electron-electron interaction then carries a factor ``1/Z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import wrightomega

__all__ = [
    "HFProjError",
    "ConfigurationError",
    "GapViolationError",
    "SymmetryError",
    "RadialGrid",
    "build_grid",
    "Configuration",
    "derive_counts",
    "SpectralWindow",
    "build_window",
    "GapReport",
    "z_thresholds",
    "WINDOW_TOL",
]

DEFAULT_SCHEME = "log-linear"
DEFAULT_R_MAX = 60.0
DEFAULT_COUNT = 4000
MIN_COUNT = 16

# eigenvalues within this distance of a window edge count as inside
WINDOW_TOL = 1e-12


class HFProjError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(HFProjError, ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class GapViolationError(HFProjError):
    """Spectral windows overlap or hold the wrong number of eigenvalues."""


class SymmetryError(HFProjError):
    """A density operator is not rotation invariant (partially filled m-subshell)."""


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Discretization of ``(0, r_max]`` on a uniformly spaced auxiliary variable.

    The radius is ``r = g(x)`` with ``x`` equispaced (step ``step``).  Radial
    functions vanish at the two ghost nodes ``inner_ghost`` and ``outer_ghost``
    just outside the grid, so the plain sum ``sum(weights * f)`` is the
    trapezoidal rule in ``x``.

    Attributes
    ----------
    points : ndarray
        Radii ``r_i``, strictly increasing, ``points[-1] == r_max``.
    weights : ndarray
        Quadrature weights ``g'(x_i) * step``.
    scheme : str
        ``"log-linear"`` or ``"uniform"``.
    jacobian : ndarray
        ``dr/dx`` at the nodes.
    curvature : ndarray
        ``(3/4)(g''/g')**2 - (1/2) g'''/g'``, the potential that appears when
        ``-d²/dr²`` is symmetrized in the ``x`` variable.
    """

    points: np.ndarray
    weights: np.ndarray
    scheme: str
    r_max: float
    count: int
    step: float
    jacobian: np.ndarray
    curvature: np.ndarray
    inner_ghost: float
    outer_ghost: float
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("points", "weights", "jacobian", "curvature"):
            getattr(self, name).setflags(write=False)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def inner(self, f, g) -> float:
        return float(np.dot(self.weights, f * g))

    def norm(self, f) -> float:
        return math.sqrt(self.inner(f, f))

    def same_as(self, other: "RadialGrid") -> bool:
        return self is other or (
            self.scheme == other.scheme
            and self.count == other.count
            and np.array_equal(self.points, other.points)
        )


def _log_linear_radius(x, transition):
    # solves ln r + r/a = x; wrightomega(y) = W(exp(y)) avoids overflow
    x = np.asarray(x, dtype=float)
    r = transition * np.real(wrightomega(x - math.log(transition)))
    # very coarse grids can push the inner ghost below the double range
    ok = r > 0
    for _ in range(2):
        ro = r[ok]
        r[ok] = ro - (np.log(ro) + ro / transition - x[ok]) / (1.0 / ro + 1.0 / transition)
    return r


def build_grid(
    scheme: str = DEFAULT_SCHEME,
    r_max: float = DEFAULT_R_MAX,
    count: int = DEFAULT_COUNT,
    *,
    r_min: float = 1e-10,
    transition: float = 1.0,
) -> RadialGrid:
    """Build a radial grid.

    ``"log-linear"`` uses ``x = ln r + r/transition``: logarithmic spacing
    below ``transition`` (resolving the Coulomb cusp) and nearly uniform
    spacing ``step * transition`` beyond it.  The first node is ``r_min``.
    A hard wall at ``r_min`` raises s-levels by about ``4 r_min``, so keep
    it small.  ``"uniform"`` places ``count`` nodes at ``r_max * i / count``.
    """
    if not r_max > 0 or not math.isfinite(r_max):
        raise ConfigurationError("r_max", f"must be positive and finite, got {r_max!r}")
    if int(count) != count or count < MIN_COUNT:
        raise ConfigurationError("count", f"must be an integer >= {MIN_COUNT}, got {count!r}")
    count = int(count)

    if scheme == "uniform":
        h = r_max / count
        r = h * np.arange(1, count + 1, dtype=float)
        r[-1] = r_max
        jac = np.ones(count)
        curv = np.zeros(count)
        return RadialGrid(r, h * jac, scheme, float(r_max), count, h, jac, curv, 0.0, r_max + h)

    if scheme != "log-linear":
        raise ConfigurationError("scheme", f"unknown grid scheme {scheme!r}")
    if not 0 < r_min < r_max:
        raise ConfigurationError("r_min", f"must lie in (0, r_max), got {r_min!r}")
    if not transition > 0:
        raise ConfigurationError("transition", f"must be positive, got {transition!r}")

    a = float(transition)
    x0 = math.log(r_min) + r_min / a
    x1 = math.log(r_max) + r_max / a
    x = np.linspace(x0, x1, count)
    h = float(x[1] - x[0])
    r = _log_linear_radius(x, a)
    r[0], r[-1] = r_min, r_max
    jac = r * a / (a + r)
    curv = a**3 * (0.25 * a + r) / (a + r) ** 4
    ghosts = _log_linear_radius(np.array([x0 - h, x1 + h]), a)
    return RadialGrid(
        r, jac * h, scheme, float(r_max), count, h, jac, curv, float(ghosts[0]), float(ghosts[1])
    )


# ---------------------------------------------------------------------------
# configurations

_MODES = ("unrestricted", "restricted", "hartree")


@dataclass(frozen=True)
class Configuration:
    """Atomic number, spin count and filled-shell structure.

    ``shells`` is a tuple of principal numbers ``n_1 < ... < n_s`` in the
    unrestricted and Hartree modes, and a tuple of ``(n, l)`` pairs in the
    restricted mode.  Hartree mode is the Hartree functional viewed as
    Hartree-Fock with ``q = N`` spin states and the single shell ``n = 1``.
    ``z`` may be ``math.inf`` (interaction switched off).
    """

    z: float
    q: int = 2
    mode: str = "unrestricted"
    shells: tuple = (1,)

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ConfigurationError("mode", f"must be one of {_MODES}, got {self.mode!r}")
        try:
            z = float(self.z)
        except (TypeError, ValueError):
            raise ConfigurationError("z", f"must be a number, got {self.z!r}") from None
        if not z > 0 or math.isnan(z):
            raise ConfigurationError("z", f"must be positive, got {self.z!r}")
        object.__setattr__(self, "z", z)
        if isinstance(self.q, bool) or int(self.q) != self.q or self.q < 1:
            raise ConfigurationError("q", f"must be a positive integer, got {self.q!r}")
        object.__setattr__(self, "q", int(self.q))
        if not self.shells:
            raise ConfigurationError("shells", "at least one shell is required")

        if self.mode == "restricted":
            if self.q != 1:
                raise ConfigurationError("q", "restricted mode uses q = 1")
            shells = []
            for item in self.shells:
                try:
                    n, ell = (int(v) for v in item)
                except (TypeError, ValueError):
                    raise ConfigurationError("shells", f"expected [n, l] pairs, got {item!r}") from None
                if n < 1 or not 0 <= ell <= n - 1:
                    raise ConfigurationError("shells", f"invalid shell index ({n}, {ell})")
                shells.append((n, ell))
            if len(set(shells)) != len(shells):
                raise ConfigurationError("shells", f"shell indices must be pairwise distinct: {shells}")
            if any(a[0] > b[0] for a, b in zip(shells, shells[1:])):
                raise ConfigurationError("shells", "principal numbers must be non-decreasing")
            object.__setattr__(self, "shells", tuple(shells))
        else:
            try:
                shells = [int(n) for n in self.shells]
            except (TypeError, ValueError):
                raise ConfigurationError("shells", f"expected integers, got {self.shells!r}") from None
            if any(isinstance(n, (list, tuple)) for n in self.shells):
                raise ConfigurationError("shells", "expected integers")
            if len(set(shells)) != len(shells):
                raise ConfigurationError("shells", f"duplicate shells: {shells}")
            if any(n < 1 for n in shells) or shells != sorted(shells):
                raise ConfigurationError("shells", f"need 1 <= n_1 < n_2 < ..., got {shells}")
            if self.mode == "hartree" and shells != [1]:
                raise ConfigurationError("shells", "hartree mode uses the single shell [1]")
            object.__setattr__(self, "shells", tuple(shells))

    @property
    def restricted(self) -> bool:
        return self.mode == "restricted"

    @property
    def n_electrons(self) -> int:
        return derive_counts(self)[0]

    @property
    def principal_numbers(self) -> tuple[int, ...]:
        if self.restricted:
            return tuple(sorted({n for n, _ in self.shells}))
        return self.shells

    @property
    def spin_factor(self) -> int:
        return 1 if self.restricted else self.q

    def channel_shells(self) -> dict[int, list[int]]:
        """Map angular momentum to the occupied principal numbers in that channel."""
        out: dict[int, list[int]] = {}
        if self.restricted:
            for n, ell in self.shells:
                out.setdefault(ell, []).append(n)
        else:
            for ell in range(max(self.shells)):
                out[ell] = [n for n in self.shells if n >= ell + 1]
        return {ell: sorted(ns) for ell, ns in sorted(out.items())}

    def with_z(self, z: float) -> "Configuration":
        return Configuration(z=z, q=self.q, mode=self.mode, shells=self.shells)


def derive_counts(config: Configuration) -> tuple[int, float]:
    """Return ``(N, Δ_s)`` with ``Δ_s = n_s**-2 - (n_s + 1)**-2``."""
    if config.restricted:
        n_el = sum(2 * ell + 1 for _, ell in config.shells)
        n_top = max(n for n, _ in config.shells)
    else:
        n_el = config.q * sum(n * n for n in config.shells)
        n_top = max(config.shells)
    return n_el, n_top**-2 - (n_top + 1) ** -2


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class SpectralWindow:
    """Disjoint closed intervals below zero selecting the occupied eigenvalues.

    ``levels[k]`` is the principal number whose hydrogenic level ``-1/n**2``
    is the left end of ``intervals[k]``.
    """

    intervals: tuple[tuple[float, float], ...]
    expected_count: int
    levels: tuple[int, ...] = ()

    def locate(self, value: float, tol: float = WINDOW_TOL) -> int | None:
        """Index of the interval containing ``value`` (edges widened by ``tol``)."""
        for k, (a, b) in enumerate(self.intervals):
            if a - tol <= value <= b + tol:
                return k
        return None

    def contains(self, value: float, tol: float = WINDOW_TOL) -> bool:
        return self.locate(value, tol) is not None

    @property
    def upper(self) -> float:
        return self.intervals[-1][1]


def build_window(config: Configuration) -> SpectralWindow:
    """Intervals ``[-1/n**2, -1/n**2 + 4N/Z]``, one per occupied principal number."""
    n_el, _ = derive_counts(config)
    width = 4.0 * n_el / config.z
    levels = config.principal_numbers
    intervals = tuple((-(n**-2), -(n**-2) + width) for n in levels)
    for (n, (_, b)), (m, (c, _)) in zip(zip(levels, intervals), zip(levels[1:], intervals[1:])):
        if b >= c:
            raise GapViolationError(
                f"window for n={n} reaches {b:.6g}, overlapping the window for n={m} "
                f"starting at {c:.6g} (4N/Z = {width:.6g}; Z too small)"
            )
    if intervals[-1][1] >= 0:
        raise GapViolationError(
            f"window for n={levels[-1]} reaches {intervals[-1][1]:.6g} >= 0 (4N/Z = {width:.6g})"
        )
    return SpectralWindow(intervals, n_el, tuple(levels))


# ---------------------------------------------------------------------------
# thresholds


@dataclass(frozen=True)
class GapReport:
    """Shell gap, window gap and the uniqueness thresholds for a configuration.

    ``delta`` is the window gap ``Δ_s - 4N/Z``; ``valid`` is false when it is
    not positive, in which case ``contraction_bound`` is ``inf``.
    """

    n_electrons: int
    delta_s: float
    delta: float
    z_threshold_contraction: float
    z_threshold_minimizer: float
    z_threshold_hartree: float
    contraction_bound: float
    valid: bool

    @property
    def z_critical(self) -> int:
        """Smallest integer Z strictly above the Hartree uniqueness threshold."""
        return math.floor(self.z_threshold_hartree) + 1

    def as_dict(self) -> dict:
        return {
            "n_electrons": self.n_electrons,
            "delta_s": self.delta_s,
            "delta": self.delta,
            "z_threshold_contraction": self.z_threshold_contraction,
            "z_threshold_minimizer": self.z_threshold_minimizer,
            "z_threshold_hartree": self.z_threshold_hartree,
            "contraction_bound": self.contraction_bound if math.isfinite(self.contraction_bound) else None,
            "valid": self.valid,
        }


def contraction_constant(n_electrons: int, delta: float, z: float, factor: float = 8.0) -> float:
    """Lipschitz bound ``factor/(δZ) (1 + √(2N)) √(2N)`` of the projection map."""
    if delta <= 0:
        return math.inf
    root = math.sqrt(2 * n_electrons)
    return factor / (delta * z) * (1 + root) * root


def z_thresholds(config: Configuration) -> GapReport:
    n_el, delta_s = derive_counts(config)
    root = math.sqrt(2 * n_el)
    delta = delta_s - 4.0 * n_el / config.z
    return GapReport(
        n_electrons=n_el,
        delta_s=delta_s,
        delta=delta,
        z_threshold_contraction=(20 * n_el + 8 * root) / delta_s,
        z_threshold_minimizer=(12 * n_el + 4 * root - 4) / delta_s,
        z_threshold_hartree=(40 * n_el + 16 * root - 8) / 3,
        contraction_bound=contraction_constant(n_el, delta, config.z),
        valid=delta > 0,
    )
