"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line that is printed at the end of the
run (see ``conftest.pytest_terminal_summary``) and also on stdout.
"""

import math

import numpy as np

from hfproj.bounds import (
    eigenvalue_sandwich,
    form_estimate_checks,
    h1_estimate_checks,
    kinetic_trace_checks,
    virial_check,
)
from hfproj.core import Configuration, z_thresholds
from hfproj.fixedpoint import limit_study, lipschitz_estimate, solve, uniqueness_probe
from hfproj.hartree import restricted_minimize
from hfproj.operators import kinetic_nuclear_matrix
from hfproj.oracle import (
    coulomb_gate,
    random_projection_sweep,
    rotation_example,
    slater_direct_check,
    trace_formula_check,
)
from hfproj.spectral import channel_eigensolve, hydrogenic_state, random_state

from . import reference_values as ref
from .conftest import ACCEPTANCE_LINES

SCAN_Z = (50, 100, 200, 400, 800)
CRITICAL_CHARGES = (35, 51, 66, 81, 96, 111, 126, 140)


def _record_extra(key, label, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}. {title}: {detail}"
    ACCEPTANCE_LINES[key] = line
    print(line)
    return ok


def _record(number, title, ok, detail):
    return _record_extra(number, f"{number:>2}", title, ok, detail)


def test_01_hydrogenic_spectrum(default_grid):
    s = channel_eigensolve(kinetic_nuclear_matrix(default_grid, 0), 3).values
    p = channel_eigensolve(kinetic_nuclear_matrix(default_grid, 1), 1).values
    exact = np.array([*ref.HYDROGEN_S, ref.HYDROGEN_P])
    rel = np.abs(np.concatenate([s, p]) - exact) / np.abs(exact)
    ok = bool(np.all(rel <= 1e-6))
    _record(1, "hydrogenic spectrum", ok, f"max rel err {rel.max():.2e} (tol 1e-6)")
    assert ok


def test_02_oracle_gate(default_grid):
    gate = coulomb_gate(default_grid, tol=1e-6)
    slater = slater_direct_check(default_grid, tol=1e-8)
    ok = all(r.passed for r in gate + slater) and len(gate) == 60
    worst = max(r.rel_error for r in gate)
    _record(2, "Coulomb oracle gate", ok, f"{len(gate)} elements, worst rel err {worst:.1e}; 1s-1s = 5/4")
    assert ok


def test_03_contraction_regime(helium, helium_solution, grid):
    state, report = helium_solution
    probe = uniqueness_probe(helium, n_starts=5, grid=grid)
    lip = lipschitz_estimate(helium, n_pairs=10, grid=grid)
    eps = [lvl.energy for lvl in report.levels]
    ok = (
        report.converged
        and report.final_residual < 1e-10
        and report.iterations <= 30
        and probe.max_distance < 1e-8
        and all(-1.0 <= e <= -1.0 + 8 / 35 for e in eps)
        and lip.max_ratio < 1
    )
    _record(
        3,
        "contraction regime Z=35",
        ok,
        f"{report.iterations} iterations, residual {report.final_residual:.1e}, "
        f"start spread {probe.max_distance:.1e}, Lipschitz ratio {lip.max_ratio:.3f}",
    )
    assert ok


def test_04_eigenvalue_sandwich(helium, helium_solution, boron, boron_solution, grid):
    runs = [(helium, helium_solution[0]), (boron, boron_solution[0])]
    for z in SCAN_Z:
        cfg = helium.with_z(z)
        runs.append((cfg, solve(cfg, hydrogenic_state(cfg, grid))[0]))
    reports = [r for cfg, st in runs for r in eigenvalue_sandwich(cfg, st, minimizer=True)]
    failed = [r.name for r in reports if not r.passed]
    ok = not failed
    _record(4, "eigenvalue sandwich", ok, f"{len(reports)} bounds over {len(runs)} runs, {len(failed)} violated")
    assert ok, failed


def test_05_limit_rate(helium, grid):
    study = limit_study(helium, SCAN_Z, grid=grid)
    within = all(r.within_bound for r in study.rows)
    ok = within and study.slope is not None and abs(study.slope + 1) <= 0.1
    _record(5, "hydrogenic limit rate", ok, f"slope {study.slope:.4f}, all within bound: {within}")
    assert ok


def test_06_projection_comparison():
    sweep = random_projection_sweep(12, 1000, seed=0, slack=1e-12)
    rot = rotation_example(0.1)
    err = abs(rot.kernel_value - math.sqrt(2) * math.sin(0.1))
    ok = sweep.passed and sweep.kernel_value == 0 and err <= 1e-12
    _record(6, "projection comparison", ok, f"{int(sweep.kernel_value)} violations in 1000 trials; rotation err {err:.1e}")
    assert ok


def test_07_bound_reports(helium, helium_solution, grid):
    state, report = helium_solution
    rng = np.random.default_rng(0)
    tests = [(ell, grid.points ** (ell + 1) * np.exp(-zeta * grid.points)) for ell in (0, 1) for zeta in (0.5, 1.0, 2.0)]
    others = [random_state(helium, grid, rng), hydrogenic_state(helium, grid)]
    reports = (
        form_estimate_checks(helium, state)
        + [r for q in others for r in h1_estimate_checks(state, q, tests)]
        + [virial_check(helium, state, report.final_residual)]
        + kinetic_trace_checks(helium, state, report.final_residual)
        + trace_formula_check(tol=1e-10)
    )
    failed = [getattr(r, "name", getattr(r, "subject", "?")) for r in reports if r.passed is False]
    ok = not failed
    _record(7, "form, H1, virial and trace checks", ok, f"{len(reports)} reports, {len(failed)} failed")
    assert ok, failed


def test_08_hartree_collapse(hartree_z35):
    res, unres = hartree_z35
    energies = [b["energy"] for b in unres.branches]
    labels = [b["label"] for b in unres.branches]
    e_spread = max(energies) - min(energies)
    rescaled = unres.rescaled_energy
    ok = (
        len(energies) == 5
        and any(label.startswith("segregated") for label in labels)
        and all(b["symmetric"] and b["converged"] and b["spread"] < 1e-6 for b in unres.branches)
        and e_spread < 1e-8
        and -2.0 <= rescaled <= -2.0 + 5 / 140
        and rescaled <= ref.HELIUM_TRIAL_Z35 + 1e-6
    )
    _record(8, "Hartree collapse Z=35", ok, f"rescaled energy {rescaled:.8f}, energy spread {e_spread:.1e}")
    assert ok


def test_09_phase_segregation(hartree_z102, h_grid):
    """Literal reading: one number ``E`` per model, compared to -1 and -1.02 directly."""
    res, unres = hartree_z102
    unit = restricted_minimize(2, 1.0, grid=h_grid)
    checks = {
        "restricted(1.02) > -1": res.energy > -1.0,
        "unrestricted(1.02) <= -1.02": unres.converged and unres.energy <= -1.02,
        "restricted(1.00) >= -1 - 1e-6": unit.energy >= -1.0 - 1e-6,
    }
    ok = all(checks.values())
    detail = ", ".join(f"{k} {'ok' if v else 'violated'}" for k, v in checks.items())
    _record(
        9,
        "phase segregation (literal)",
        ok,
        f"{detail}; restricted {res.energy:.6f}, unrestricted {unres.energy:.6f}",
    )
    assert ok, (
        "no single energy unit satisfies both halves: the restricted energy at Z=1.02 "
        "exceeds -1 only after division by Z^2, where the unrestricted one no longer "
        "reaches -1.02 (see test_09b)"
    )


def test_09b_phase_segregation_scaled(hartree_z102):
    """Companion check in rescaled units, ``e = E / Z^2``.

    The restricted minimum stays above -1 while the unrestricted minimum
    drops below -1 through a segregated, non-symmetric configuration.
    """
    res, unres = hartree_z102
    ok = (
        res.converged
        and res.rescaled_energy > -1.0
        and unres.converged
        and not unres.symmetric
        and unres.rescaled_energy < -1.0
        and unres.energy <= -1.02
    )
    line = (
        f"rescaled restricted {res.rescaled_energy:.6f} > -1 > "
        f"rescaled unrestricted {unres.rescaled_energy:.6f}; unscaled unrestricted {unres.energy:.6f} <= -1.02"
    )
    _record_extra(9.5, " 9b", "phase segregation (rescaled)", ok, line)
    assert ok


def test_10_restricted_boron(boron, boron_solution):
    state, report = boron_solution
    n_el = 5
    levels_ok = all(-1 / l.n**2 <= l.energy <= -1 / l.n**2 + 4 * n_el / boron.z for l in report.levels)
    occ = {int(ell): [float(x) for x in ch.occupancies] for ell, ch in state.channels.items()}
    occ_ok = occ == {0: [1.0, 1.0], 1: [3.0]}
    ok = report.converged and levels_ok and occ_ok
    eps = ", ".join(f"{l.n}{'sp'[l.ell]} {l.energy:.5f}" for l in report.levels)
    _record(10, "restricted HF Z=150", ok, f"{eps}; occupations {occ}")
    assert ok


def test_11_threshold_table():
    got = tuple(z_thresholds(Configuration(z=1000, q=n, mode="hartree", shells=[1])).z_critical for n in range(2, 10))
    ok = got == CRITICAL_CHARGES
    mismatch = [f"N={n}: {g} vs {e}" for n, g, e in zip(range(2, 10), got, CRITICAL_CHARGES) if g != e]
    _record(11, "threshold table", ok, "all 8 entries match" if ok else "; ".join(mismatch))
    assert ok
