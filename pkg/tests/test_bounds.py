import math

import numpy as np
import pytest

from hfproj.bounds import (
    BoundReport,
    eigenvalue_sandwich,
    form_estimate_checks,
    h1_estimate_checks,
    kinetic_trace_checks,
    sandwich_upper,
    virial_check,
)
from hfproj.operators import DensityState
from hfproj.spectral import hydrogenic_state, random_state


def _s_orbital(grid, zeta, power=0):
    r = grid.points
    u = r ** (power + 1) * np.exp(-zeta * r)
    return u / grid.norm(u)


class TestSandwich:
    def test_upper_arithmetic(self):
        assert sandwich_upper(-1.0, 2, 35) == pytest.approx(-1 + 4 / 35)
        assert sandwich_upper(-1.0, 2, 35) == pytest.approx(-0.8857, abs=1e-4)
        expected = -0.25 + 4 / 35 + (4 / 35) * math.sqrt(3) / 2
        assert sandwich_upper(-0.25, 2, 35) == pytest.approx(expected)
        assert expected == pytest.approx(-0.0367, abs=1e-4)

    def test_converged_helium(self, helium, helium_solution):
        reports = eigenvalue_sandwich(helium, helium_solution[0], minimizer=True)
        assert all(r.passed for r in reports)
        uppers = [r for r in reports if r.name.startswith("sandwich-upper")]
        assert all(r.margin > 0 for r in uppers)
        assert any(r.name.startswith("sandwich-minimizer") for r in reports)

    def test_more_levels(self, helium, helium_solution):
        reports = eigenvalue_sandwich(helium, helium_solution[0], levels=3)
        assert len(reports) == 2 * 3 * 2
        assert all(r.passed for r in reports)

    def test_restricted(self, boron, boron_solution):
        assert all(r.passed for r in eigenvalue_sandwich(boron, boron_solution[0], minimizer=True))


class TestFormEstimates:
    def test_converged_helium(self, helium, helium_solution):
        reports = form_estimate_checks(helium, helium_solution[0])
        assert reports and all(r.passed for r in reports)
        names = {r.name for r in reports}
        assert "form(iv) eps=0.5 l=0" in names
        assert "kinetic<=2H+4 l=1" in names

    def test_item_iii_small_epsilon(self, helium, helium_solution):
        (rep,) = [r for r in form_estimate_checks(helium, helium_solution[0], epsilons=[0.1], ells=[0])
                  if r.name.startswith("form(iii)")]
        assert rep.margin > 0

    def test_random_state(self, helium, grid, rng):
        reports = form_estimate_checks(helium, random_state(helium, grid, rng), epsilons=[0.3, 3.0], ells=[0])
        assert all(r.passed for r in reports)

    @pytest.mark.parametrize("eps", [0.0, -1.0, math.inf])
    def test_bad_epsilon(self, helium, helium_solution, eps):
        with pytest.raises(ValueError):
            form_estimate_checks(helium, helium_solution[0], epsilons=[eps])


class TestH1:
    def test_identical(self, helium_solution, grid):
        p = helium_solution[0]
        reports = h1_estimate_checks(p, p, [_s_orbital(grid, 1.0)])
        assert all(r.lhs == pytest.approx(0.0, abs=1e-14) for r in reports)

    def test_two_exponents(self, grid):
        p = DensityState.from_orbitals(grid, {0: [_s_orbital(grid, 1.0)]}, 1)
        q = DensityState.from_orbitals(grid, {0: [_s_orbital(grid, 2.0)]}, 1)
        reports = h1_estimate_checks(p, q, [_s_orbital(grid, 1.0)])
        assert len(reports) == 2
        assert all(r.passed and r.margin > 0 for r in reports)

    def test_random_triples(self, grid, rng):
        from hfproj.core import Configuration

        cfg = Configuration(z=200, q=2, shells=[1, 2])
        failures = 0
        for _ in range(50):
            p, q = random_state(cfg, grid, rng), random_state(cfg, grid, rng)
            ell = int(rng.integers(0, 3))
            phi = _s_orbital(grid, rng.uniform(0.3, 3.0), ell + int(rng.integers(0, 3)))
            failures += sum(not r.passed for r in h1_estimate_checks(p, q, [(ell, phi)]))
        assert failures == 0


class TestVirial:
    def test_converged_helium(self, helium, helium_solution):
        state, report = helium_solution
        rep = virial_check(helium, state, report.final_residual)
        assert rep.applicable and rep.passed
        assert rep.lhs < 1e-4

    def test_hydrogenic_not_applicable(self, helium, grid):
        rep = virial_check(helium, hydrogenic_state(helium, grid))
        assert not rep.applicable and rep.passed is None
        assert "pass" in rep.as_dict()

    def test_restricted(self, boron, boron_solution):
        state, report = boron_solution
        rep = virial_check(boron, state, report.final_residual)
        assert rep.applicable and rep.passed

    def test_kinetic_traces(self, helium, helium_solution):
        state, report = helium_solution
        reports = kinetic_trace_checks(helium, state, report.final_residual)
        assert all(r.passed for r in reports)


def test_report_pass_logic():
    assert BoundReport.make("x", 1.0, 1.0 - 1e-9, 1e-8).passed
    assert not BoundReport.make("x", 1.0, 0.9, 1e-8).passed
    assert BoundReport.make("x", 1.0, 0.0, 0.0, applicable=False).passed is None
