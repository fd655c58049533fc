import math

import pytest

from hfproj import fixedpoint
from hfproj.core import Configuration, GapViolationError
from hfproj.fixedpoint import (
    limit_bound,
    default_damping,
    limit_study,
    lipschitz_estimate,
    loglog_slope,
    solve,
    uniqueness_regime,
    uniqueness_probe,
)
from hfproj.spectral import distances, hydrogenic_state


class TestSolve:
    def test_helium(self, helium_solution):
        state, report = helium_solution
        assert report.converged
        assert report.final_residual < 1e-10
        assert report.iterations <= 30
        assert report.empirical_lipschitz < 1
        assert report.damping == 0.0
        (level,) = report.levels
        assert (level.n, level.ell) == (1, 0)
        assert -1.0 <= level.energy <= -1.0 + 8.0 / 35.0
        assert level.in_window and level.in_ev_bounds
        assert state.n_electrons == pytest.approx(2.0)

    def test_report_serializes(self, helium_solution):
        d = helium_solution[1].as_dict()
        assert d["converged"] is True
        assert len(d["trace"]) == d["iterations"]
        assert d["theoretical_lipschitz"] == pytest.approx(2.63, abs=0.01)

    def test_energy_monotone_tail(self, helium_solution):
        energies = [rec.energy for rec in helium_solution[1].iterates]
        assert abs(energies[-1] - energies[-2]) < 1e-12

    def test_huge_charge_is_hydrogenic(self, grid):
        cfg = Configuration(z=1e6, q=2, shells=[1])
        state, report = solve(cfg, grid=grid)
        assert report.converged
        assert distances(state, hydrogenic_state(cfg, grid)).hs < 1e-4

    def test_restricted(self, boron, boron_solution):
        state, report = boron_solution
        n_el = 5
        assert {(l.n, l.ell) for l in report.levels} == {(1, 0), (2, 0), (2, 1)}
        for lvl in report.levels:
            lo = -1.0 / lvl.n**2
            assert lo <= lvl.energy <= lo + 4 * n_el / boron.z
        assert state.n_electrons == pytest.approx(5.0)

    def test_non_convergence_reported(self, helium, grid):
        _, report = solve(helium, grid=grid, max_iter=1)
        assert not report.converged
        assert "no convergence" in report.message

    def test_gap_violation_propagates(self, grid):
        with pytest.raises(GapViolationError):
            solve(Configuration(z=20, q=2, shells=[1, 2]), grid=grid)

    @pytest.mark.parametrize("damping", [-0.1, 1.0])
    def test_bad_damping(self, helium, grid, damping):
        with pytest.raises(ValueError):
            solve(helium, grid=grid, damping=damping)

    def test_damped_iteration_reaches_same_point(self, helium, helium_solution, grid):
        state, report = solve(helium, grid=grid, damping=0.3, max_iter=100)
        assert report.converged
        assert distances(state, helium_solution[0]).hs < 1e-9


class TestRegime:
    def test_uniqueness_regime(self, helium):
        assert uniqueness_regime(helium)
        assert default_damping(helium) == 0.0
        below = Configuration(z=30, q=2, shells=[1])
        assert not uniqueness_regime(below)
        assert default_damping(below) == pytest.approx(0.3)


class TestUniqueness:
    def test_single_start(self, helium, grid):
        rep = uniqueness_probe(helium, n_starts=1, grid=grid)
        assert rep.max_distance == 0.0
        assert rep.consistent and not rep.exploratory

    def test_below_threshold_is_exploratory(self, grid):
        cfg = Configuration(z=1.02, q=2, mode="hartree", shells=[1])
        rep = uniqueness_probe(cfg, n_starts=2, grid=grid)
        assert rep.exploratory
        assert rep.errors and not rep.consistent


class TestLipschitz:
    def test_helium_sample(self, helium, grid):
        rep = lipschitz_estimate(helium, n_pairs=4, seed=3, grid=grid)
        assert rep.theoretical == pytest.approx(8 / ((0.75 - 8 / 35) * 35) * 3 * 2)
        assert len(rep.ratios) == 4
        assert rep.max_ratio < 1

    def test_large_charge(self, grid):
        cfg = Configuration(z=746.7, q=2, shells=[1])
        rep = lipschitz_estimate(cfg, n_pairs=2, grid=grid)
        assert rep.theoretical < 0.15
        assert rep.max_ratio < rep.theoretical

    def test_identical_pairs_excluded(self, helium, grid, monkeypatch):
        fixed = hydrogenic_state(helium, grid)
        monkeypatch.setattr(fixedpoint, "random_state", lambda *args: fixed)
        rep = lipschitz_estimate(helium, n_pairs=1, grid=grid)
        assert rep.ratios == [] and rep.max_ratio == 0.0


class TestLimit:
    def test_bound_arithmetic(self):
        cfg = Configuration(z=100, q=2, shells=[1])
        assert limit_bound(cfg) == pytest.approx(4 * math.sqrt(2) / 0.67 * 0.02 * 3, rel=1e-12)
        assert limit_bound(cfg) == pytest.approx(0.5066, abs=1e-4)

    def test_bound_grows_towards_threshold(self):
        zs = [11.0, 15.0, 30.0, 100.0]
        bounds = [limit_bound(Configuration(z=z, q=2, shells=[1])) for z in zs]
        assert bounds == sorted(bounds, reverse=True)
        assert limit_bound(Configuration(z=10.0, q=2, shells=[1])) == math.inf

    def test_doubling(self, helium, grid):
        study = limit_study(helium, [100, 200], grid=grid)
        (a, b) = study.rows
        assert a.hs_distance <= a.bound and b.hs_distance <= b.bound
        assert b.hs_distance / a.hs_distance == pytest.approx(0.5, abs=0.03)
        assert study.slope == pytest.approx(-1.0, abs=0.1)

    def test_failures_recorded(self, helium, grid):
        study = limit_study(helium, [5.0, 100.0], grid=grid)
        bad, good = study.rows
        assert not bad.converged and bad.error
        assert good.converged
        assert study.slope is None and not study.all_converged

    def test_slope_needs_two_points(self):
        assert loglog_slope([10.0], [1.0]) is None
        assert loglog_slope([1.0, 10.0, 100.0], [1.0, 0.1, 0.01]) == pytest.approx(-1.0)
