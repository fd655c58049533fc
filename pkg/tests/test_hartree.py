import numpy as np
import pytest

from hfproj.hartree import (
    default_starts,
    hartree_energy,
    hydrogenic_orbital,
    restricted_minimize,
    segregation_scan,
    unrestricted_minimize,
)

from . import reference_values as ref


def test_single_electron_is_hydrogenic(h_grid):
    sol = restricted_minimize(1, 2.0, grid=h_grid)
    assert sol.converged
    assert sol.energy == pytest.approx(-4.0, rel=1e-8)


def test_energy_of_trial_orbital(h_grid):
    # two electrons in exp(-zeta r): 2 zeta^2 - 4 Z zeta + (5/4) zeta
    zeta, z = 1.3, 2.0
    u = hydrogenic_orbital(h_grid, zeta)
    assert hartree_energy(z, [u, u], h_grid) == pytest.approx(ref.trial_energy(zeta, z), rel=1e-8)


class TestLargeCharge:
    def test_restricted(self, hartree_z35):
        res, _ = hartree_z35
        assert res.converged
        assert -2.0 <= res.rescaled_energy <= -2.0 + 5.0 / 140.0
        assert res.rescaled_energy <= ref.HELIUM_TRIAL_Z35 + 1e-6

    def test_unrestricted_collapses_to_symmetric(self, hartree_z35):
        res, unres = hartree_z35
        assert unres.symmetric and unres.spread < 1e-6
        assert len(unres.branches) == 5
        assert all(b["symmetric"] and b["converged"] for b in unres.branches)
        energies = [b["energy"] for b in unres.branches]
        assert max(energies) - min(energies) < 1e-8
        assert unres.energy == pytest.approx(res.energy, rel=1e-8)


class TestSmallCharge:
    def test_restricted_above_hydrogenic_limit(self, hartree_z102):
        res, _ = hartree_z102
        assert res.converged
        assert res.energy > -(1.02**2)
        assert res.rescaled_energy > -1.0

    def test_restricted_below_trial_value(self, hartree_z102):
        res, _ = hartree_z102
        assert res.energy <= ref.HARTREE_TRIAL_Z102 + 1e-10

    def test_unrestricted_segregates(self, hartree_z102):
        res, unres = hartree_z102
        assert unres.converged and not unres.symmetric
        assert unres.energy <= -1.02
        assert unres.energy < res.energy - 1e-3
        compact, diffuse = sorted(unres.orbitals, key=lambda u: unres.grid.integrate(u * u * unres.grid.points))
        r = unres.grid.points
        assert unres.grid.integrate(diffuse**2 * r) > 3 * unres.grid.integrate(compact**2 * r)

    def test_unit_charge_restricted_bound(self, h_grid):
        res = restricted_minimize(2, 1.0, grid=h_grid)
        assert res.energy >= -1.0 - 1e-6


def test_scan_flags(h_grid):
    (row,) = segregation_scan([35.0], grid=h_grid)
    assert row.converged and not row.segregated
    assert abs(row.gap) < 1e-8


def test_starts_shape():
    starts = default_starts(3, 10.0)
    assert all(len(z) == 3 for _, z in starts)
    assert any(label.startswith("segregated") for label, _ in starts)


@pytest.mark.parametrize("z", [0.0, -1.0, np.nan])
def test_bad_charge(z, h_grid):
    with pytest.raises(ValueError):
        restricted_minimize(2, z, grid=h_grid)
    with pytest.raises(ValueError):
        unrestricted_minimize(2, z, grid=h_grid)


def test_start_length_checked(h_grid):
    with pytest.raises(ValueError):
        unrestricted_minimize(2, 5.0, starts=[("bad", [1.0])], grid=h_grid)
