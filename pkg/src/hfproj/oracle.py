"""Brute-force validators for the trusted numerical kernels.

The Coulomb oracle works on analytic radial functions with its own
Gauss-Legendre quadrature and evaluates the angular integrals of spherical
harmonics by exact quadrature on the sphere.  It never touches the grid,
the Poisson solver or the angular weight table of :mod:`hfproj.operators`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre, sph_harm_y

from .core import RadialGrid, build_grid
from .operators import DensityState, exchange_apply, hartree_potential
from .spectral import projection_bound_check

__all__ = [
    "OracleReport",
    "ExponentialShape",
    "default_shapes",
    "CoulombIntegrals",
    "coulomb_oracle",
    "coulomb_kernel",
    "coulomb_gate",
    "slater_direct_check",
    "random_projection_sweep",
    "rotation_example",
    "trace_formula_check",
]

MAX_ELL = 2
GATE_TOL = 1e-6


@dataclass(frozen=True)
class OracleReport:
    """Oracle value against kernel value; ``passed`` iff ``rel_error <= tolerance``."""

    subject: str
    oracle_value: float
    kernel_value: float
    rel_error: float
    passed: bool
    tolerance: float
    details: dict = field(default_factory=dict)

    @classmethod
    def compare(cls, subject, oracle_value, kernel_value, tolerance, **details) -> "OracleReport":
        scale = max(abs(oracle_value), 1e-300)
        rel = abs(kernel_value - oracle_value) / scale
        return cls(subject, float(oracle_value), float(kernel_value), float(rel), bool(rel <= tolerance), tolerance, details)

    def as_dict(self) -> dict:
        out = {
            "subject": self.subject,
            "oracle_value": self.oracle_value,
            "kernel_value": self.kernel_value,
            "rel_error": self.rel_error,
            "pass": self.passed,
            "tolerance": self.tolerance,
        }
        if self.details:
            out["details"] = self.details
        return out


# ---------------------------------------------------------------------------
# orbital shapes


@dataclass(frozen=True)
class ExponentialShape:
    """Normalized reduced radial function ``c r^(l+1+p) exp(-zeta r)``."""

    ell: int
    power: int
    zeta: float

    @property
    def degree(self) -> int:
        return self.ell + 1 + self.power

    @property
    def norm(self) -> float:
        n = self.degree
        return math.sqrt((2 * self.zeta) ** (2 * n + 1) / math.factorial(2 * n))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.norm * r**self.degree * np.exp(-self.zeta * r)


def default_shapes() -> list[tuple[int, float]]:
    """Ten ``(power, zeta)`` pairs spanning compact to diffuse orbitals."""
    return [(0, 1.0), (0, 0.5), (0, 2.0), (1, 1.0), (1, 0.7), (2, 1.5), (0, 3.0), (1, 2.5), (2, 0.8), (3, 1.2)]


# ---------------------------------------------------------------------------
# radial quadrature


@lru_cache(maxsize=None)
def _gl(order: int):
    return roots_legendre(order)


def _panels(a: float, b: float, breaks: np.ndarray, order: int):
    x, w = _gl(order)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def _outer_rule(length: float, order: int = 24, panels: int = 40):
    # geometric refinement toward the origin, uniform-ish further out
    breaks = np.concatenate([[0.0], length * np.geomspace(1e-6, 1.0, panels)])
    return _panels(0.0, length, breaks, order)


def _inner_rules(r: np.ndarray, length: float, order: int = 24, panels: int = 12):
    """Nodes/weights on ``[0, r_i]`` and ``[r_i, length]`` for every outer node."""
    x, w = _gl(order)
    frac = np.concatenate([[0.0], np.geomspace(1e-4, 1.0, panels)])
    lo, hi = frac[:-1], frac[1:]
    t = (0.5 * (hi + lo))[:, None] + 0.5 * (hi - lo)[:, None] * x[None, :]
    tw = 0.5 * (hi - lo)[:, None] * w[None, :]
    t, tw = t.ravel(), tw.ravel()
    below = r[:, None] * t[None, :]
    below_w = r[:, None] * tw[None, :]
    above = r[:, None] + (length - r)[:, None] * t[None, :]
    above_w = (length - r)[:, None] * tw[None, :]
    return below, below_w, above, above_w


def _radial_multipole(f, g, k: int, length: float) -> float:
    """``∫∫ f(r) r_<^k / r_>^(k+1) g(s) dr ds`` by nested Gauss-Legendre."""
    r, wr = _outer_rule(length)
    below, bw, above, aw = _inner_rules(r, length)
    inner = (
        r ** (-k - 1) * np.sum(bw * below**k * g(below), axis=1)
        + r**k * np.sum(aw * above ** (-k - 1) * g(above), axis=1)
    )
    return float(np.sum(wr * f(r) * inner))


# ---------------------------------------------------------------------------
# angular integrals


@lru_cache(maxsize=None)
def _sphere_rule(order: int = 16):
    x, w = _gl(order)
    theta = np.arccos(x)
    nphi = 2 * order
    phi = 2 * np.pi * np.arange(nphi) / nphi
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    wt = np.repeat(w[:, None], nphi, axis=1) * (2 * np.pi / nphi)
    return th.ravel(), ph.ravel(), wt.ravel()


def _ylm(ell, m):
    th, ph, _ = _sphere_rule()
    return sph_harm_y(ell, m, th, ph)


def _gaunt(l1, m1, l2, m2, k, q) -> complex:
    """``∫ conj(Y_l1m1) Y_l2m2 conj(Y_kq) dΩ`` by exact quadrature."""
    _, _, wt = _sphere_rule()
    return complex(np.sum(wt * np.conj(_ylm(l1, m1)) * _ylm(l2, m2) * np.conj(_ylm(k, q))))


@lru_cache(maxsize=None)
def _angular_factors(ell_a: int, ell_b: int, k: int, m_a: int = 0) -> tuple[float, float]:
    """Direct and exchange angular factors for multipole ``k``, summed over ``m_b``.

    With ``1/|x-y| = sum_kq 4π/(2k+1) r_<^k/r_>^(k+1) conj(Y_kq(x)) Y_kq(y)``.
    """
    direct = exchange = 0.0
    pref = 4 * np.pi / (2 * k + 1)
    for m_b in range(-ell_b, ell_b + 1):
        for q in range(-k, k + 1):
            # direct: |Y_a(x)|^2 |Y_b(y)|^2
            ax = _gaunt(ell_a, m_a, ell_a, m_a, k, q)
            by = np.conj(_gaunt(ell_b, m_b, ell_b, m_b, k, q))
            direct += (pref * ax * by).real
            # exchange: conj(Y_a(x)) Y_b(x) conj(Y_b(y)) Y_a(y)
            # the y-integral ∫ conj(Y_b) Y_a Y_kq is the conjugate of the x-integral
            cx = _gaunt(ell_a, m_a, ell_b, m_b, k, q)
            exchange += pref * abs(cx) ** 2
    return float(direct), float(exchange)


# ---------------------------------------------------------------------------
# Coulomb integrals


@dataclass(frozen=True)
class CoulombIntegrals:
    """Direct and exchange interaction of orbital ``a`` with a filled subshell ``b``.

    ``direct = sum_mb ∫∫ |φ_a(x)|² |φ_b(y)|² 2/|x-y|`` and
    ``exchange = sum_mb ∫∫ φ_a(x) φ_b(x) φ_b(y) φ_a(y) 2/|x-y|``
    (complex conjugates implied), for any fixed ``m_a``.
    """

    direct: float
    exchange: float
    direct_by_k: dict
    exchange_by_k: dict


def _radial(spec):
    ell, radial = spec
    if not 0 <= ell <= MAX_ELL:
        raise ValueError(f"angular momentum {ell} outside the supported range 0..{MAX_ELL}")
    if isinstance(radial, ExponentialShape):
        return int(ell), radial, 40.0 / radial.zeta
    return int(ell), radial, 60.0


def coulomb_oracle(orbital_a, orbital_b, *, m_b: int | None = None) -> CoulombIntegrals:
    """Two-electron integrals from the Legendre expansion, without selection rules.

    ``orbital_a`` and ``orbital_b`` are ``(ell, radial)`` pairs where
    ``radial`` is a callable reduced radial function (normalized).  Every
    multipole ``0 <= k <= ell_a + ell_b + 2`` is evaluated; vanishing ones
    show up as zeros in the per-``k`` breakdown.
    """
    la, fa, len_a = _radial(orbital_a)
    lb, fb, len_b = _radial(orbital_b)
    length = max(len_a, len_b)
    if m_b is not None:
        raise NotImplementedError("only filled subshells are supported")
    direct_k, exchange_k = {}, {}
    for k in range(0, la + lb + 3):
        ang_d, ang_x = _angular_factors(la, lb, k)
        rd = rx = 0.0
        if abs(ang_d) > 1e-14:
            rd = _radial_multipole(lambda r: fa(r) ** 2, lambda s: fb(s) ** 2, k, length)
        if abs(ang_x) > 1e-14:
            prod = lambda r: fa(r) * fb(r)  # noqa: E731
            rx = _radial_multipole(prod, prod, k, length)
        direct_k[k] = 2.0 * ang_d * rd
        exchange_k[k] = 2.0 * ang_x * rx
    return CoulombIntegrals(sum(direct_k.values()), sum(exchange_k.values()), direct_k, exchange_k)


def coulomb_kernel(orbital_a, orbital_b, grid: RadialGrid) -> tuple[float, float]:
    """The same two integrals from the production grid kernels."""
    la, fa, _ = _radial(orbital_a)
    lb, fb, _ = _radial(orbital_b)
    ua = fa(grid.points)
    ub = fb(grid.points)
    ua = ua / grid.norm(ua)
    ub = ub / grid.norm(ub)
    state = DensityState.from_orbitals(grid, {lb: [ub]}, spin_factor=1)
    direct = grid.inner(ua * ua, hartree_potential(state.density()))
    exchange = grid.inner(ua, exchange_apply(state, la, ua))
    return float(direct), float(exchange)


def coulomb_gate(
    grid: RadialGrid | None = None,
    pairs=((0, 0), (0, 1), (1, 1)),
    shapes=None,
    tol: float = GATE_TOL,
) -> list[OracleReport]:
    """Kernel against oracle for every channel pair and shape.

    Shape ``i`` is paired with shape ``i + 1`` (cyclically), so every shape
    appears on both sides.
    """
    grid = grid or build_grid()
    shapes = shapes or default_shapes()
    out = []
    for la, lb in pairs:
        for i, (pa, za) in enumerate(shapes):
            pb, zb = shapes[(i + 1) % len(shapes)]
            a = (la, ExponentialShape(la, pa, za))
            b = (lb, ExponentialShape(lb, pb, zb))
            ref = coulomb_oracle(a, b)
            direct, exchange = coulomb_kernel(a, b, grid)
            tag = f"l=({la},{lb}) shape {i}: p={pa},{pb} zeta={za},{zb}"
            out.append(OracleReport.compare(f"direct {tag}", ref.direct, direct, tol))
            out.append(OracleReport.compare(f"exchange {tag}", ref.exchange, exchange, tol))
    return out


def slater_direct_check(grid: RadialGrid | None = None, tol: float = 1e-8) -> list[OracleReport]:
    """The 1s-1s direct integral against its closed form 5/4."""
    grid = grid or build_grid()
    s = (0, ExponentialShape(0, 0, 1.0))
    ref = coulomb_oracle(s, s)
    direct, exchange = coulomb_kernel(s, s, grid)
    return [
        OracleReport.compare("1s-1s direct: oracle vs 5/4", 1.25, ref.direct, tol),
        OracleReport.compare("1s-1s direct: kernel vs 5/4", 1.25, direct, tol),
        OracleReport.compare("1s-1s exchange equals direct", ref.direct, ref.exchange, tol),
    ]


# ---------------------------------------------------------------------------
# projection comparison sweep


def _random_symmetric_pair(rng: np.random.Generator, dim: int, window=(-0.5, 0.5)):
    a_lo, a_hi = window
    inside = rng.integers(1, dim) if dim > 1 else 1
    vals_in = rng.uniform(a_lo, a_hi, size=inside)
    gap = rng.uniform(0.05, 1.0)
    side = rng.random(dim - inside) < 0.5
    vals_out = np.where(
        side, a_lo - gap - rng.uniform(0, 2, dim - inside), a_hi + gap + rng.uniform(0, 2, dim - inside)
    )
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    a = (q * np.concatenate([vals_in, vals_out])) @ q.T
    e = rng.standard_normal((dim, dim))
    e = 0.5 * (e + e.T) * 10 ** rng.uniform(-4, -0.5)
    return a, a + e


def random_projection_sweep(
    dim: int = 8, trials: int = 1000, seed: int = 0, *, slack: float = 1e-12, window=(-0.5, 0.5)
) -> OracleReport:
    """Random gapped pairs of symmetric matrices of size up to ``dim``.

    Pairs whose computed two-sided gap is below ``1e-3`` are redrawn.
    ``kernel_value`` counts violations of the projection bound.
    """
    if not 2 <= dim <= 16:
        raise ValueError("dim must lie in 2..16")
    rng = np.random.default_rng(seed)
    violations = 0
    worst = 0.0
    done = 0
    while done < trials:
        n = int(rng.integers(2, dim + 1))
        a, b = _random_symmetric_pair(rng, n, window)
        try:
            rep = projection_bound_check(a, b, [window], slack=slack)
        except ValueError:
            continue
        if rep.delta < 1e-3:
            continue
        done += 1
        if rep.rhs > 0:
            worst = max(worst, rep.lhs / rep.rhs)
        if not rep.passed:
            violations += 1
    return OracleReport(
        "projection comparison sweep",
        float(trials),
        float(violations),
        violations / trials,
        violations == 0,
        0.0,
        {"max_dim": dim, "seed": seed, "max_lhs_over_rhs": worst},
    )


def rotation_example(theta: float = 0.1, tol: float = 1e-12) -> OracleReport:
    """``A = diag(0, 2)`` against its rotation by ``theta``; exact ``lhs = √2 sin θ``."""
    a = np.diag([0.0, 2.0])
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    rep = projection_bound_check(a, rot @ a @ rot.T, [(-0.5, 0.5)])
    exact = math.sqrt(2) * math.sin(theta)
    out = OracleReport.compare("2x2 rotation lhs", exact, rep.lhs, tol, rhs=rep.rhs, bound_holds=rep.passed)
    return out


# ---------------------------------------------------------------------------
# trace formula


def trace_formula_check(
    grid: RadialGrid | None = None,
    rank: int = 6,
    seed: int = 0,
    *,
    tol: float = 1e-10,
    signed: bool = True,
    positive: bool = False,
) -> list[OracleReport]:
    """Discrete density of a random finite-rank kernel ``K = sum_i λ_i |ψ_i><φ_i|``.

    The density is built from the singular value decomposition of ``K`` in
    the grid inner product and compared with the rank-one definition
    ``sum_i λ_i ψ_i φ_i``; then ``∫ρ_K = tr K`` and ``∫|ρ_K| <= tr|K|``.
    With ``positive=True`` the kernel is ``sum_i λ_i |ψ_i><ψ_i|`` with
    ``λ_i > 0``, for which the second relation is an equality.
    """
    if not 1 <= rank <= 10:
        raise ValueError("rank must lie in 1..10")
    grid = grid or build_grid("log-linear", 30.0, 400)
    rng = np.random.default_rng(seed)
    r = grid.points
    sw = np.sqrt(grid.weights)
    env = np.exp(-0.3 * r) * r
    psi = rng.standard_normal((rank, grid.count)) * env
    phi = rng.standard_normal((rank, grid.count)) * env
    lam = rng.uniform(0.1, 1.0, rank)
    if positive:
        phi = psi
    elif signed:
        lam *= rng.choice([-1.0, 1.0], rank)
    kz = (psi * sw).T @ (lam[:, None] * (phi * sw))
    u, s, vt = np.linalg.svd(kz)
    rho_svd = np.einsum("n,in,ni->i", s, u, vt) / grid.weights
    rho_direct = lam @ (psi * phi)
    trace = float(np.trace(kz))
    l1 = grid.integrate(np.abs(rho_svd))
    scale = grid.integrate(np.abs(rho_direct))
    return [
        OracleReport.compare(
            "trace formula: density from SVD equals rank-one sum",
            scale,
            scale + grid.integrate(np.abs(rho_svd - rho_direct)),
            tol,
        ),
        OracleReport.compare("trace formula (i): integral equals trace", trace, grid.integrate(rho_svd), tol),
        OracleReport(
            "trace formula (ii): L1 norm within trace norm",
            float(np.sum(s)),
            l1,
            max(l1 - float(np.sum(s)), 0.0) / float(np.sum(s)),
            bool(l1 <= float(np.sum(s)) * (1 + tol)),
            tol,
            {"strict": bool(l1 < float(np.sum(s)))},
        ),
    ]
