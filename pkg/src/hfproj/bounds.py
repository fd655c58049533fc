"""Operator inequalities and eigenvalue estimates checked on the discretization.

Each check yields a :class:`BoundReport`.  Operator inequalities ``A <= B``
are evaluated channel by channel as the smallest eigenvalue of ``B - A``;
the report then has ``lhs = 0`` and ``rhs`` equal to that eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Configuration
from .operators import (
    DensityState,
    exchange_apply,
    fock_channel,
    hartree_potential,
    hf_energy_terms,
    kinetic_nuclear_matrix,
    laplacian_matrix,
    local_operator,
)
from .spectral import channel_eigensolve, distances, lowest_eigenvalue, projection_step

__all__ = [
    "MATRIX_TOL",
    "VIRIAL_TOL",
    "APPLICABLE_RESIDUAL",
    "BoundReport",
    "sandwich_upper",
    "eigenvalue_sandwich",
    "form_estimate_checks",
    "h1_estimate_checks",
    "virial_check",
    "kinetic_trace_checks",
]

MATRIX_TOL = 1e-8
SANDWICH_LOWER_TOL = 1e-10
VIRIAL_TOL = 1e-4
# the virial identity only holds at solutions of the fixed-point equation
APPLICABLE_RESIDUAL = 1e-7


@dataclass(frozen=True)
class BoundReport:
    """A checked inequality ``lhs <= rhs``; ``passed`` iff ``margin >= -tolerance``.

    ``applicable`` is false when the precondition of the bound does not hold
    (the numbers are still reported, ``passed`` is then ``None``).
    """

    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool | None
    tolerance: float
    applicable: bool = True
    details: dict = field(default_factory=dict)

    @classmethod
    def make(cls, name, lhs, rhs, tolerance, applicable=True, **details) -> "BoundReport":
        margin = float(rhs) - float(lhs)
        passed = bool(margin >= -tolerance) if applicable else None
        return cls(name, float(lhs), float(rhs), margin, passed, tolerance, applicable, details)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "pass": self.passed,
            "tolerance": self.tolerance,
            "applicable": self.applicable,
            **({"details": self.details} if self.details else {}),
        }


# ---------------------------------------------------------------------------
# eigenvalue sandwich


def sandwich_upper(e_inf: float, n_electrons: float, z: float) -> float:
    """``E + 2N/Z + 2(N/Z) sqrt(E + 1)``."""
    c = n_electrons / z
    return e_inf + 2 * c + 2 * c * math.sqrt(max(e_inf + 1.0, 0.0))


def _channel_levels(config, state, ell, count):
    fock = channel_eigensolve(fock_channel(config, state, ell), count).values
    free = channel_eigensolve(kinetic_nuclear_matrix(state.grid, ell), count).values
    return fock, free


def eigenvalue_sandwich(
    config: Configuration,
    state: DensityState,
    *,
    minimizer: bool = False,
    levels: int | None = None,
) -> list[BoundReport]:
    """Compare Fock eigenvalues with hydrogenic ones channel by channel.

    For each channel the lowest ``levels`` radial eigenvalues ``E^Z`` of
    ``H_P`` are checked against ``E^∞ <= E^Z <= sandwich_upper(E^∞)`` with
    ``E^∞`` the eigenvalues of the discretized ``-Δ - V``.  With
    ``minimizer=True`` the ``N``-th eigenvalue of the full operator
    (multiplicities ``(2l+1) q``) is also checked against the sharper bound
    with ``N - 1`` in place of ``N``.
    """
    n_el = state.n_electrons
    top = max(config.principal_numbers)
    out = []
    full_fock, full_free = [], []
    for ell in range(top + 1):
        count = levels or (top - ell + 1)
        fock, free = _channel_levels(config, state, ell, count)
        mult = (2 * ell + 1) * state.spin_factor
        for i, (ez, ei) in enumerate(zip(fock, free)):
            n = ell + 1 + i
            out.append(
                BoundReport.make(f"sandwich-lower l={ell} n={n}", ei, ez, SANDWICH_LOWER_TOL, e_inf=ei, e_z=ez)
            )
            upper = sandwich_upper(ei, n_el, config.z)
            out.append(BoundReport.make(f"sandwich-upper l={ell} n={n}", ez, upper, MATRIX_TOL, e_inf=ei))
            full_fock.extend([ez] * mult)
            full_free.extend([ei] * mult)
    if minimizer:
        k = int(round(n_el))
        ez = sorted(full_fock)[k - 1]
        ei = sorted(full_free)[k - 1]
        upper = sandwich_upper(ei, n_el - 1, config.z)
        out.append(BoundReport.make(f"sandwich-minimizer N={k}", ez, upper, MATRIX_TOL, e_inf=ei))
    return out


# ---------------------------------------------------------------------------
# form estimates


def _validate_eps(eps: float):
    if not eps > 0 or not math.isfinite(eps):
        raise ValueError(f"epsilon must be positive and finite, got {eps!r}")


def form_estimate_checks(
    config: Configuration,
    state: DensityState,
    epsilons=(0.25, 0.5, 1.0, 2.0),
    ells=None,
) -> list[BoundReport]:
    """Check the four quadratic-form estimates on every listed channel.

    (i)   ``V <= -εΔ + 1/ε``
    (ii)  ``U_P <= N(-εΔ + 1/ε)``
    (iii) ``U_P/Z <= ε(-Δ - V) + (ε + N/Z)²/ε``
    (iv)  ``-Δ <= H_P/(1-ε) + 1/(ε(1-ε))`` for ``ε`` in ``(0, 1)``

    together with ``-Δ <= 2 H_P + 4`` (item (iv) at ``ε = 1/2``).
    """
    eps_list = [float(e) for e in epsilons]
    for e in eps_list:
        _validate_eps(e)
    grid = state.grid
    n_el = state.n_electrons
    inv_z = 0.0 if math.isinf(config.z) else 1.0 / config.z
    if ells is None:
        ells = range(max(config.principal_numbers) + 1)
    coulomb = 2.0 / grid.points
    u_p = hartree_potential(state.density())
    out = []
    for ell in ells:
        lap = laplacian_matrix(grid, ell)
        h0 = kinetic_nuclear_matrix(grid, ell)
        v = local_operator(grid, ell, coulomb)
        u = local_operator(grid, ell, u_p)
        fock = fock_channel(config, state, ell)
        for eps in eps_list:
            checks = [
                ("i", eps * lap + (1 / eps) - v),
                ("ii", n_el * (eps * lap + (1 / eps)) - u),
                ("iii", eps * h0 + (eps + n_el * inv_z) ** 2 / eps - inv_z * u),
            ]
            if eps < 1:
                checks.append(("iv", (1 / (1 - eps)) * fock + 1 / (eps * (1 - eps)) - lap))
            for item, op in checks:
                out.append(
                    BoundReport.make(f"form({item}) eps={eps:g} l={ell}", 0.0, lowest_eigenvalue(op), MATRIX_TOL)
                )
        out.append(
            BoundReport.make(f"kinetic<=2H+4 l={ell}", 0.0, lowest_eigenvalue(2.0 * fock + 4.0 - lap), MATRIX_TOL)
        )
    return out


# ---------------------------------------------------------------------------
# H1 estimates


def _as_test_function(item):
    if isinstance(item, tuple):
        return int(item[0]), np.asarray(item[1], dtype=float)
    return 0, np.asarray(item, dtype=float)


def h1_estimate_checks(p: DensityState, q: DensityState, test_functions) -> list[BoundReport]:
    """``||(U_P - U_Q)φ|| <= 4||P-Q||_1 ||∇φ||`` and ``||(K_P - K_Q)φ|| <= 4||P-Q||_2 ||∇φ||``.

    ``test_functions`` holds radial arrays (s-type) or ``(ell, u)`` pairs;
    each is normalized before use.
    """
    grid = p.grid
    dist = distances(p, q)
    du = hartree_potential(p.density()) - hartree_potential(q.density())
    out = []
    for idx, item in enumerate(test_functions):
        ell, u = _as_test_function(item)
        u = u / grid.norm(u)
        grad = math.sqrt(max(laplacian_matrix(grid, ell).expectation(u), 0.0))
        lhs_u = grid.norm(du * u)
        lhs_k = grid.norm(exchange_apply(p, ell, u) - exchange_apply(q, ell, u))
        out.append(
            BoundReport.make(f"h1-direct #{idx} l={ell}", lhs_u, 4 * dist.trace * grad, MATRIX_TOL)
        )
        out.append(
            BoundReport.make(f"h1-exchange #{idx} l={ell}", lhs_k, 4 * dist.hs * grad, MATRIX_TOL)
        )
    return out


# ---------------------------------------------------------------------------
# virial and kinetic traces


def _map_residual(config, state) -> float:
    try:
        image, _ = projection_step(config, state)
    except Exception:  # a state far from any solution may violate the gap
        return math.inf
    return distances(state, image).hs


def virial_check(
    config: Configuration, state: DensityState, residual: float | None = None
) -> BoundReport:
    """Relative deviation of the kinetic trace from ``|E^HF|``.

    Reported as ``lhs = |T - |E|| / |E|`` against ``rhs = 1e-4``.  Marked not
    applicable unless ``state`` solves the fixed-point equation to within
    ``APPLICABLE_RESIDUAL``.
    """
    terms = hf_energy_terms(config, state)
    if residual is None:
        residual = _map_residual(config, state)
    applicable = residual <= APPLICABLE_RESIDUAL
    energy = abs(terms.total)
    dev = abs(terms.kinetic - energy) / energy
    return BoundReport.make(
        "virial", dev, VIRIAL_TOL, 0.0, applicable, kinetic=terms.kinetic, energy=terms.total, residual=residual
    )


def kinetic_trace_checks(
    config: Configuration, state: DensityState, residual: float | None = None
) -> list[BoundReport]:
    """``tr(χ(-Δ)χ) <= 4N`` for any image of the map, and ``<= N`` at solutions."""
    terms = hf_energy_terms(config, state)
    n_el = state.n_electrons
    if residual is None:
        residual = _map_residual(config, state)
    at_solution = residual <= APPLICABLE_RESIDUAL
    return [
        BoundReport.make("kinetic-trace<=4N", terms.kinetic, 4 * n_el, MATRIX_TOL),
        BoundReport.make("kinetic-trace<=N", terms.kinetic, n_el, MATRIX_TOL, at_solution),
    ]
