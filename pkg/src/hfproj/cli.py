"""Command-line driver: ``hfproj {solve,scan-z,verify,hartree} --config PATH``.

Exit codes
----------
0  success
1  a verification report failed
2  an iteration did not converge
3  invalid configuration
4  spectral gap violation
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, fixedpoint, hartree, oracle
from .core import Configuration, ConfigurationError, GapViolationError, build_grid, build_window, z_thresholds
from .operators import hf_energy_terms
from .spectral import hydrogenic_state, random_state

EXIT_OK = 0
EXIT_REPORT_FAILED = 1
EXIT_NOT_CONVERGED = 2
EXIT_INVALID_CONFIG = 3
EXIT_GAP_VIOLATION = 4

_MODE_MAP = {"uhf": "unrestricted", "rhf": "restricted", "hartree": "hartree"}
_TOP_KEYS = {"mode", "z", "q", "shells", "grid", "solver", "experiment"}
_GRID_KEYS = {"scheme", "r_max", "count", "r_min", "transition"}
_SOLVER_KEYS = {"tol", "max_iter", "damping", "seed"}
_EXPERIMENT_KEYS = {"name", "z_values", "n_starts", "n_pairs", "sweep_trials", "sweep_dim"}


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """Validated contents of a JSON run configuration."""

    mode: str
    z: float
    q: int
    shells: list
    grid: dict = field(default_factory=dict)
    tol: float = 1e-10
    max_iter: int = 100
    damping: float | None = None
    seed: int = 0
    experiment: dict = field(default_factory=dict)

    def configuration(self, z: float | None = None) -> Configuration:
        return Configuration(z=self.z if z is None else z, q=self.q, mode=_MODE_MAP[self.mode], shells=self.shells)

    def build_grid(self, default: dict):
        return build_grid(**{**default, **self.grid})

    @property
    def experiment_name(self) -> str:
        return self.experiment.get("name", "")


def _check_keys(section: dict, allowed: set, prefix: str):
    for key in section:
        if key not in allowed:
            raise ConfigurationError(f"{prefix}{key}", "unknown key")


def _number(value, name, *, integer=False, positive=True):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(name, f"must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigurationError(name, f"must be an integer, got {value!r}")
    if positive and not value > 0:
        raise ConfigurationError(name, f"must be positive, got {value!r}")
    return int(value) if integer else float(value)


def parse_run_config(data) -> RunConfig:
    """Validate a decoded JSON object; errors name the offending field."""
    if not isinstance(data, dict):
        raise ConfigurationError("config", "top level must be a JSON object")
    _check_keys(data, _TOP_KEYS, "")
    mode = data.get("mode", "uhf")
    if mode not in _MODE_MAP:
        raise ConfigurationError("mode", f"must be one of {sorted(_MODE_MAP)}, got {mode!r}")
    if "z" not in data:
        raise ConfigurationError("z", "missing")
    z = _number(data["z"], "z")
    q = _number(data.get("q", 1 if mode == "rhf" else 2), "q", integer=True)
    shells = data.get("shells", [1])
    if not isinstance(shells, list):
        raise ConfigurationError("shells", "must be an array")

    grid = data.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigurationError("grid", "must be an object")
    _check_keys(grid, _GRID_KEYS, "grid.")
    if "scheme" in grid and grid["scheme"] not in ("log-linear", "uniform"):
        raise ConfigurationError("grid.scheme", f"unknown scheme {grid['scheme']!r}")
    grid = dict(grid)
    for key in ("r_max", "r_min", "transition"):
        if key in grid:
            grid[key] = _number(grid[key], f"grid.{key}")
    if "count" in grid:
        grid["count"] = _number(grid["count"], "grid.count", integer=True)

    solver = data.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigurationError("solver", "must be an object")
    _check_keys(solver, _SOLVER_KEYS, "solver.")
    tol = _number(solver.get("tol", 1e-10), "solver.tol")
    max_iter = _number(solver.get("max_iter", 100), "solver.max_iter", integer=True)
    damping = solver.get("damping")
    if damping is not None:
        damping = _number(damping, "solver.damping", positive=False)
        if not 0 <= damping < 1:
            raise ConfigurationError("solver.damping", f"must lie in [0, 1), got {damping!r}")
    seed = _number(solver.get("seed", 0), "solver.seed", integer=True, positive=False)
    if seed < 0:
        raise ConfigurationError("solver.seed", "must be non-negative")

    experiment = data.get("experiment", {})
    if not isinstance(experiment, dict):
        raise ConfigurationError("experiment", "must be an object")
    _check_keys(experiment, _EXPERIMENT_KEYS, "experiment.")
    if "z_values" in experiment:
        zs = experiment["z_values"]
        if not isinstance(zs, list) or not zs:
            raise ConfigurationError("experiment.z_values", "must be a non-empty array")
        experiment = {**experiment, "z_values": [_number(v, "experiment.z_values") for v in zs]}

    run = RunConfig(mode, z, q, shells, grid, tol, max_iter, damping, seed, experiment)
    run.configuration()  # full validation of the physical configuration
    if grid:
        try:
            run.build_grid({})
        except ConfigurationError as exc:
            raise ConfigurationError(f"grid.{exc.field}", exc.message) from None
        except ValueError as exc:
            raise ConfigurationError("grid", str(exc)) from None
    return run


def load_run_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError("config", f"invalid JSON: {exc}") from None
    return parse_run_config(data)


# ---------------------------------------------------------------------------
# deterministic output


def _clean(obj):
    """Recursively convert numpy scalars and arrays; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, payload: dict):
    # shortest round-trip representation of every float
    _atomic_write(path, json.dumps(_clean(payload), indent=2, allow_nan=False) + "\n")


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())


# ---------------------------------------------------------------------------
# subcommands


def _solver_grid(run: RunConfig):
    return run.build_grid(fixedpoint.SOLVER_GRID)


def _orbital_rows(state):
    grid = state.grid
    header = ["r"]
    columns = []
    for ell, ch in sorted(state.channels.items()):
        for i, u in enumerate(ch.orbitals):
            n = ch.labels[i] if i < len(ch.labels) else ell + 1 + i
            header.append(f"n{n}l{ell}")
            columns.append(u)
    rows = zip(grid.points, *columns)
    return header, rows


def cmd_solve(run: RunConfig, out: Path) -> int:
    config = run.configuration()
    grid = _solver_grid(run)
    state, report = fixedpoint.solve(config, grid=grid, tol=run.tol, max_iter=run.max_iter, damping=run.damping)
    terms = hf_energy_terms(config, state)
    window = build_window(config)
    payload = {
        "mode": run.mode,
        "z": config.z,
        "q": config.q,
        "shells": [list(s) if isinstance(s, tuple) else s for s in config.shells],
        "n_electrons": config.n_electrons,
        "converged": report.converged,
        "occupied_eigenvalues": [lvl.energy for lvl in report.levels],
        "levels": [
            {"n": l.n, "l": l.ell, "energy": l.energy, "in_window": l.in_window, "in_ev_bounds": l.in_ev_bounds}
            for l in report.levels
        ],
        "energy": {
            "total": terms.total,
            "one_body": terms.one_body,
            "direct": terms.direct,
            "exchange": terms.exchange,
            "kinetic": terms.kinetic,
        },
        "window": [list(iv) for iv in window.intervals],
        "gap_report": z_thresholds(config).as_dict(),
        "iteration": report.as_dict(),
    }
    if run.experiment_name == "uniqueness":
        probe = fixedpoint.uniqueness_probe(
            config,
            run.experiment.get("n_starts", 5),
            run.seed,
            grid=grid,
            tol=run.tol,
            max_iter=run.max_iter,
        )
        lip = fixedpoint.lipschitz_estimate(config, run.experiment.get("n_pairs", 10), run.seed, grid=grid)
        payload["uniqueness"] = {
            "exploratory": probe.exploratory,
            "max_pairwise_distance": probe.max_distance,
            "energies": probe.energies,
            "converged": probe.converged,
            "errors": probe.errors,
        }
        payload["lipschitz"] = {"max_ratio": lip.max_ratio, "theoretical": lip.theoretical, "skipped": lip.skipped}
    write_json(out / "report.json", payload)
    header, rows = _orbital_rows(state)
    write_csv(out / "orbitals.csv", header, rows)
    if not report.converged:
        print(f"error: {report.message}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_scan_z(run: RunConfig, out: Path) -> int:
    zs = run.experiment.get("z_values")
    if not zs:
        raise ConfigurationError("experiment.z_values", "scan-z needs a list of Z values")
    study = fixedpoint.limit_study(
        run.configuration(), zs, grid=_solver_grid(run), tol=run.tol, max_iter=run.max_iter
    )
    write_csv(
        out / "scan.csv",
        ["z", "hs_distance_to_hydrogenic", "corollary_bound", "converged_iterations"],
        [(r.z, r.hs_distance, r.bound, r.iterations if r.converged else None) for r in study.rows],
    )
    payload = {
        "rows": [
            {
                "z": r.z,
                "hs_distance_to_hydrogenic": r.hs_distance,
                "corollary_bound": r.bound,
                "iterations": r.iterations,
                "converged": r.converged,
                "within_bound": r.within_bound,
                **({"error": r.error} if r.error else {}),
            }
            for r in study.rows
        ],
        "all_within_bound": all(r.within_bound for r in study.rows),
    }
    if study.slope is None:
        payload["slope_flag"] = "fewer than two converged points, no slope fitted"
    else:
        payload["slope"] = study.slope
    write_json(out / "report.json", payload)
    return EXIT_OK if study.all_converged else EXIT_NOT_CONVERGED


def _group(name, reports):
    items = [r.as_dict() for r in reports]
    failed = [d for d in items if d.get("pass") is False]
    return {"name": name, "passed": not failed, "failures": len(failed), "reports": items}


def cmd_verify(run: RunConfig, out: Path) -> int:
    config = run.configuration()
    grid = _solver_grid(run)
    state, report = fixedpoint.solve(config, grid=grid, tol=run.tol, max_iter=run.max_iter, damping=run.damping)
    residual = report.final_residual
    rng = np.random.default_rng(run.seed)
    other = random_state(config, grid, rng)
    reference = hydrogenic_state(config, grid)
    tests = [
        (ell, grid.points ** (ell + 1) * np.exp(-zeta * grid.points))
        for ell in range(max(config.principal_numbers) + 1)
        for zeta in (0.5, 1.0, 2.0)
    ]
    sweep_trials = run.experiment.get("sweep_trials", 1000)
    sweep_dim = run.experiment.get("sweep_dim", 12)
    groups = [
        _group("coulomb_oracle_gate", oracle.coulomb_gate() + oracle.slater_direct_check()),
        _group("form_estimates", bounds.form_estimate_checks(config, state)),
        _group("eigenvalue_sandwich", bounds.eigenvalue_sandwich(config, state, minimizer=report.converged)),
        _group(
            "h1_estimates",
            bounds.h1_estimate_checks(state, other, tests) + bounds.h1_estimate_checks(state, reference, tests),
        ),
        _group(
            "virial_and_kinetic_trace",
            [bounds.virial_check(config, state, residual)] + bounds.kinetic_trace_checks(config, state, residual),
        ),
        _group(
            "projection_comparison",
            [oracle.random_projection_sweep(sweep_dim, sweep_trials, run.seed), oracle.rotation_example()],
        ),
        _group("trace_formula", oracle.trace_formula_check(seed=run.seed)),
    ]
    all_pass = all(g["passed"] for g in groups) and report.converged
    payload = {
        "config": {"mode": run.mode, "z": config.z, "q": config.q, "seed": run.seed},
        "solver_converged": report.converged,
        "solver_residual": residual,
        "passed": all_pass,
        "groups": groups,
    }
    write_json(out / "verify.json", payload)
    for g in groups:
        status = "PASS" if g["passed"] else f"FAIL ({g['failures']} failed)"
        print(f"{g['name']}: {status}")
    return EXIT_OK if all_pass else EXIT_REPORT_FAILED


def _hartree_payload(sol: hartree.HartreeSolution) -> dict:
    return {
        "energy": sol.energy,
        "rescaled_energy": sol.rescaled_energy,
        "symmetric": sol.symmetric,
        "orbital_spread": sol.spread,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "branches": sol.branches,
    }


def cmd_hartree(run: RunConfig, out: Path) -> int:
    if run.mode != "hartree":
        raise ConfigurationError("mode", "the hartree subcommand needs mode 'hartree'")
    n_el = run.q
    grid = run.build_grid(hartree.HARTREE_GRID)
    kind = run.experiment_name or "unrestricted"
    if kind == "scan":
        zs = run.experiment.get("z_values")
        if not zs:
            raise ConfigurationError("experiment.z_values", "a Hartree scan needs a list of Z values")
        rows = hartree.segregation_scan(zs, n_el, grid=grid, tol=run.tol)
        write_csv(
            out / "segregation.csv",
            [
                "z",
                "restricted_energy",
                "unrestricted_energy",
                "restricted_rescaled",
                "unrestricted_rescaled",
                "gap",
                "segregated",
                "converged",
            ],
            [
                (r.z, r.restricted, r.unrestricted, r.restricted / r.z**2, r.unrestricted / r.z**2, r.gap, r.segregated, r.converged)
                for r in rows
            ],
        )
        write_json(out / "report.json", {"n_electrons": n_el, "rows": [r.as_dict() for r in rows]})
        return EXIT_OK if all(r.converged for r in rows) else EXIT_NOT_CONVERGED
    if kind not in ("restricted", "unrestricted", "both"):
        raise ConfigurationError("experiment.name", f"expected restricted, unrestricted, both or scan, got {kind!r}")
    payload = {"n_electrons": n_el, "z": run.z}
    sols = {}
    if kind in ("restricted", "both"):
        sols["restricted"] = hartree.restricted_minimize(n_el, run.z, run.tol, grid=grid)
    if kind in ("unrestricted", "both"):
        sols["unrestricted"] = hartree.unrestricted_minimize(n_el, run.z, tol=run.tol, grid=grid)
    for key, sol in sols.items():
        payload[key] = _hartree_payload(sol)
    if len(sols) == 2:
        payload["energy_difference"] = sols["restricted"].energy - sols["unrestricted"].energy
    write_json(out / "report.json", payload)
    last = sols.get("unrestricted") or sols["restricted"]
    columns = [u for u in last.orbitals]
    write_csv(
        out / "orbitals.csv",
        ["r"] + [f"orbital{k + 1}" for k in range(len(columns))],
        zip(grid.points, *columns),
    )
    return EXIT_OK if all(s.converged for s in sols.values()) else EXIT_NOT_CONVERGED


COMMANDS = {"solve": cmd_solve, "scan-z": cmd_scan_z, "verify": cmd_verify, "hartree": cmd_hartree}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hfproj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")
        p.add_argument("--seed", type=int, default=None, help="overrides solver.seed")
        p.add_argument("--threads", type=int, default=0, help="BLAS threads, 0 = library default")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = load_run_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigurationError("--seed", "must be non-negative")
            run.seed = args.seed
        if args.threads < 0:
            raise ConfigurationError("--threads", "must be non-negative")
    except ConfigurationError as exc:
        print(f"error: invalid configuration, field '{exc.field}': {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG

    from threadpoolctl import threadpool_limits

    limits = threadpool_limits(args.threads) if args.threads > 0 else None
    try:
        return COMMANDS[args.command](run, args.out)
    except ConfigurationError as exc:
        print(f"error: invalid configuration, field '{exc.field}': {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except GapViolationError as exc:
        print(f"error: spectral gap violation: {exc}", file=sys.stderr)
        return EXIT_GAP_VIOLATION
    finally:
        if limits is not None:
            limits.restore_original_limits()


if __name__ == "__main__":
    sys.exit(main())
