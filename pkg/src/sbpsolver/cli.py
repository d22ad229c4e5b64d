"""Command-line front end: ``solve``, ``verify``, ``export``, ``eigen`` and
``geometry``.

Exit codes: 0 solved (or all verdicts pass), 2 no nontrivial solution,
1 error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, threads_from_env
from .elliptic import eigenpairs, get_operator
from .energy import ProblemConfig
from .grid import BoundaryData, GridDomain
from .io import FieldFileError, atomic_write_text, read_field, write_field, write_vtk
from .lift import compute_chi
from .minimax import deflated_solve, verify_geometry, write_branch_table
from .nonlinearity import NonlinearitySpec, validate_conditions
from .verify import check_max_principle, check_nonexistence, lambda1_discrete, system_residual

__all__ = [
    "EXIT_SOLVED",
    "EXIT_NO_SOLUTION",
    "EXIT_ERROR",
    "RunReport",
    "build_problem",
    "cmd_solve",
    "cmd_verify",
    "cmd_export",
    "cmd_eigen",
    "cmd_geometry",
    "main",
]

logger = logging.getLogger(__name__)

EXIT_SOLVED = 0
EXIT_ERROR = 1
EXIT_NO_SOLUTION = 2
REPORT_NAME = "report.json"


@dataclass
class RunReport:
    """Everything a run produced; field arrays live in separate field files."""

    config: dict
    runs: list[dict]
    fields: dict[str, str]
    timings: dict[str, float]
    status: str
    exit_code: int
    version: str = __version__
    env_overrides: dict = field(default_factory=dict)
    validation: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tool": "sbpsolver",
            "version": self.version,
            "status": self.status,
            "exit_code": self.exit_code,
            "config": self.config,
            "env_overrides": self.env_overrides,
            "validation": self.validation,
            "fields": self.fields,
            "runs": self.runs,
            "timings": self.timings,
        }

    @property
    def records(self) -> list[dict]:
        return [r for run in self.runs for r in run["records"]]


# ---------------------------------------------------------------------------
# building problems from a configuration


def _boundary(domain: GridDomain, spec: dict) -> BoundaryData:
    if "file" in spec:
        f = read_field(spec["file"])
        if f.domain != domain:
            raise ConfigError(f"boundary file {spec['file']} lives on a different grid")
        return BoundaryData(domain, f.full()[domain.boundary_mask])
    return BoundaryData.per_face(domain, spec["faces"], spec["default"])


def _spec(domain: GridDomain, nl: dict) -> NonlinearitySpec:
    amp = nl["amplitude"]
    if isinstance(amp, dict):
        f = read_field(amp["file"])
        if f.domain != domain:
            raise ConfigError(f"amplitude file {amp['file']} lives on a different grid")
        amp = f.interior().ravel().copy()
    if nl["family"] == "zero":
        return NonlinearitySpec("zero", 0.0, nl["p"], nl["mu"], nl["r"])
    return NonlinearitySpec("power", amp, nl["p"], nl["mu"], nl["r"])


def _solver_kw(cfg: RunConfig) -> dict:
    return {"method": cfg.solver["linear_method"], "rtol": cfg.solver["linear_rtol"]}


def resolve_omega(value, domain: GridDomain) -> float:
    """A number, or ``{"times_lambda1": c}`` resolved with the discrete ``lambda_1``."""
    if isinstance(value, dict):
        return float(value["times_lambda1"]) * lambda1_discrete(domain)
    return float(value)


def build_problem(cfg: RunConfig) -> list[ProblemConfig]:
    """One :class:`ProblemConfig` per frequency, sharing grid and lift."""
    d = cfg.domain
    domain = GridDomain(d["dim"], tuple(d["n_per_axis"]), tuple(d["lengths"]))
    h1 = _boundary(domain, cfg.boundary["h1"])
    h2 = _boundary(domain, cfg.boundary["h2"])
    kw = _solver_kw(cfg)
    lift = compute_chi(h1, h2, **kw)
    spec = _spec(domain, cfg.nonlinearity)
    return [ProblemConfig(domain, resolve_omega(w, domain), lift, spec, dict(kw)) for w in cfg.omegas]


# ---------------------------------------------------------------------------
# commands


def _verify_record(rec, problem) -> dict:
    res = system_residual(rec, problem)
    lift = problem.lift
    mp = check_max_principle(rec.phi_full, lift.h1, lift.h2, rec.u)
    out = {"residual": res.to_dict(), "max_principle": {"status": mp.status, "min_value": mp.min_value,
                                                         "message": mp.message}}
    if problem.spec.family == "zero":
        nv = check_nonexistence(rec, problem)
        out["nonexistence"] = {"status": nv.status, "message": nv.message}
    return out


def _solve_one(problem: ProblemConfig, cfg: RunConfig) -> dict:
    s = cfg.solver
    t0 = time.perf_counter()
    geometry = None
    if s["geometry"]:
        try:
            geometry = verify_geometry(problem, seed=s["seed"], sphere_samples=s["geometry_samples"],
                                       chi_safety=s["chi_safety"]).to_dict()
        except Exception as exc:  # noqa: BLE001 - reported, the solve still runs
            geometry = {"ok": False, "failures": [f"geometry check failed: {exc}"]}
    t1 = time.perf_counter()
    result = deflated_solve(
        problem, s["deflation_count"], s["seed"], path_nodes=s["path_nodes"], max_iters=s["max_iters"],
        tol=s["tol"], separation=s["separation"], max_attempts=s["max_attempts"],
        trivial_threshold=s["trivial_threshold"],
    )
    t2 = time.perf_counter()
    run = {
        "omega": problem.omega,
        "geometry": geometry,
        "records": [],
        "_records": list(result.records),
        "attempts": result.attempts,
        "rejected": len(result.rejected),
        "shortfall": result.shortfall,
        "timings": {"geometry": t1 - t0, "solve": t2 - t1},
    }
    if problem.spec.family == "zero":
        verdicts = [check_nonexistence(r, problem) for r in list(result.records) + list(result.rejected)]
        contradiction = [v.message for v in verdicts if v.status == "contradiction"]
        lam1 = lambda1_discrete(problem.grid)
        run["nonexistence"] = {
            "status": "contradiction" if contradiction else "consistent",
            "omega_over_lambda1": problem.omega / lam1,
            "below_threshold": problem.omega <= 0.5 * lam1,
            "message": "; ".join(contradiction) if contradiction else
            ("no nontrivial solution found; consistent with nonexistence for omega <= lambda1/2"
             if not result.records else "nontrivial solutions above the nonexistence threshold"),
        }
    return run


def cmd_solve(config_path, output_dir=None, *, env=None) -> tuple[RunReport, int]:
    """Run the full pipeline and persist the report; returns ``(report, exit_code)``."""
    t_start = time.perf_counter()
    cfg, overrides = load_config(config_path).with_env_overrides(env)
    threads = threads_from_env(env)
    out = Path(output_dir) if output_dir is not None else Path.cwd() / f"{Path(config_path).stem}_run"
    problems = build_problem(cfg)
    t_lift = time.perf_counter()
    report_validation = validate_conditions(problems[0].spec)
    validation = {"passed": report_validation.passed, "failed": report_validation.failed,
                  "summary": report_validation.summary()}
    if not report_validation.passed:
        raise ConfigError(f"nonlinearity fails {', '.join(report_validation.failed)}")
    # factorize shared operators before any concurrent use
    for kind in ("neg_laplacian", "helmholtz"):
        get_operator(problems[0].grid, kind).solve_matrix(np.ones(problems[0].grid.size), method=cfg.solver["linear_method"])
    if threads > 1 and len(problems) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(lambda p: _solve_one(p, cfg), problems))
    else:
        runs = [_solve_one(p, cfg) for p in problems]
    t_solve = time.perf_counter()

    fields_dir = out / "fields"
    lift = problems[0].lift
    fields = {
        "chi": str(write_field(fields_dir / "chi", lift.chi).relative_to(out)),
        "theta": str(write_field(fields_dir / "theta", lift.theta).relative_to(out)),
    }
    n_found = 0
    for i, (run, problem) in enumerate(zip(runs, problems)):
        for rec in run.pop("_records"):
            stem = f"omega{i}_rec{rec.deflation_index}"
            meta = rec.meta()
            meta["files"] = {
                "u": str(write_field(fields_dir / f"{stem}_u", rec.u).relative_to(out)),
                "phi": str(write_field(fields_dir / f"{stem}_phi", rec.phi_full).relative_to(out)),
            }
            meta["verification"] = _verify_record(rec, problem)
            run["records"].append(meta)
            n_found += 1
    code = EXIT_SOLVED if n_found else EXIT_NO_SOLUTION
    t_end = time.perf_counter()
    report = RunReport(
        config=cfg.to_dict(),
        runs=runs,
        fields=fields,
        timings={"lift": t_lift - t_start, "solve": t_solve - t_lift, "persist": t_end - t_solve,
                 "total": t_end - t_start},
        status="solved" if n_found else "no_solution",
        exit_code=code,
        env_overrides=overrides,
        validation=validation,
    )
    atomic_write_text(out / REPORT_NAME, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return report, code


def _load_report(report_path) -> tuple[dict, Path]:
    path = Path(report_path)
    if path.is_dir():
        path = path / REPORT_NAME
    try:
        return json.loads(path.read_text()), path.parent
    except FileNotFoundError as exc:
        raise FieldFileError(f"report {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise FieldFileError(f"report {path} is not valid JSON: {exc}") from exc


def cmd_verify(report_path) -> tuple[list[dict], int]:
    """Re-run the verification from persisted fields only."""
    report, base = _load_report(report_path)
    cfg = RunConfig.from_dict(report["config"])
    chi = read_field(base / report["fields"]["chi"])
    theta = read_field(base / report["fields"]["theta"])
    domain = chi.domain
    lift = SimpleNamespace(h1=BoundaryData(domain, chi.boundary_values()),
                           h2=BoundaryData(domain, theta.boundary_values()))
    spec = _spec(domain, cfg.nonlinearity)
    results = []
    ok = True
    for run in report["runs"]:
        problem = SimpleNamespace(grid=domain, omega=float(run["omega"]), spec=spec, lift=lift)
        for meta in run["records"]:
            u = read_field(base / meta["files"]["u"])
            phi = read_field(base / meta["files"]["phi"])
            rec = SimpleNamespace(u=u, phi_full=phi, converged=meta["converged"])
            res = _verify_record(rec, problem)
            passed = res["residual"]["verdict"] == "pass" and res["max_principle"]["status"] != "fail"
            if "nonexistence" in res:
                passed = passed and res["nonexistence"]["status"] != "contradiction"
            ok = ok and passed
            results.append({"omega": run["omega"], "deflation_index": meta["deflation_index"],
                            "passed": passed, **res})
    return results, (EXIT_SOLVED if ok else EXIT_ERROR)


def cmd_export(report_path, fmt: str, output_dir=None) -> list[Path]:
    """CSV branch table or legacy VTK files (one per scalar field)."""
    if fmt not in ("csv", "vtk"):
        raise ValueError(f"unknown export format {fmt!r}; expected 'csv' or 'vtk'")
    report, base = _load_report(report_path)
    out = Path(output_dir) if output_dir is not None else base / "export"
    if fmt == "csv":
        rows = []
        for run in report["runs"]:
            for meta in sorted(run["records"], key=lambda m: m["deflation_index"]):
                rows.append({"omega": float(run["omega"]), "deflation_index": meta["deflation_index"],
                             "J_value": float(meta["J_value"]), "u_L2_norm": float(meta["u_L2_norm"]),
                             "dual_norm": float(meta["dual_norm"]), "iterations": meta["iterations"],
                             "converged": bool(meta["converged"])})
        path = out / "branch_table.csv"
        write_branch_table(rows, path)
        return [path]
    paths = [write_vtk(out / "chi.vtk", {"chi": read_field(base / report["fields"]["chi"])}, "chi")]
    for i, run in enumerate(report["runs"]):
        for meta in run["records"]:
            stem = f"omega{i}_rec{meta['deflation_index']}"
            for key, name in (("u", "u"), ("phi", "phi")):
                f = read_field(base / meta["files"][key])
                paths.append(write_vtk(out / f"{stem}_{name}.vtk", {name: f},
                                       f"{name} omega={run['omega']!r} index={meta['deflation_index']}"))
    return paths


def cmd_eigen(config_path, count: int) -> list[tuple[int, float, float]]:
    """Rows ``(k, lambda_k, residual)`` of the discrete Dirichlet spectrum."""
    cfg = load_config(config_path)
    d = cfg.domain
    domain = GridDomain(d["dim"], tuple(d["n_per_axis"]), tuple(d["lengths"]))
    basis = eigenpairs(domain, count)
    return [(k + 1, float(lam), float(r)) for k, (lam, r) in enumerate(zip(basis.lambdas, basis.residuals))]


def cmd_geometry(config_path, *, env=None) -> list[dict]:
    cfg, _ = load_config(config_path).with_env_overrides(env)
    s = cfg.solver
    return [
        {"omega": p.omega, **verify_geometry(p, seed=s["seed"], sphere_samples=s["geometry_samples"],
                                              chi_safety=s["chi_safety"]).to_dict()}
        for p in build_problem(cfg)
    ]


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sbpsolver", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="run the full pipeline")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory (default: <config stem>_run)")
    p = sub.add_parser("verify", help="re-verify a report from its field files")
    p.add_argument("report")
    p = sub.add_parser("export", help="export a report as CSV or VTK")
    p.add_argument("report")
    p.add_argument("--format", required=True, choices=("csv", "vtk"))
    p.add_argument("-o", "--output", help="output directory (default: <report dir>/export)")
    p = sub.add_parser("eigen", help="print the lowest discrete Dirichlet eigenvalues")
    p.add_argument("config")
    p.add_argument("--count", type=int, default=6)
    p = sub.add_parser("geometry", help="print the mountain-pass geometry report")
    p.add_argument("config")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            report, code = cmd_solve(args.config, args.output)
            for run in report.runs:
                print(f"omega = {run['omega']!r}: {len(run['records'])} solution(s)"
                      + (f" [{run['shortfall']}]" if run["shortfall"] else ""))
                for meta in run["records"]:
                    print(f"  #{meta['deflation_index']}  J = {meta['J_value']:.8g}  "
                          f"dual_norm = {meta['dual_norm']:.2e}  "
                          f"verify = {meta['verification']['residual']['verdict']}")
                if "nonexistence" in run:
                    print(f"  nonexistence check: {run['nonexistence']['status']} "
                          f"({run['nonexistence']['message']})")
            return code
        if args.command == "verify":
            results, code = cmd_verify(args.report)
            for r in results:
                print(f"omega = {r['omega']!r} #{r['deflation_index']}: {'pass' if r['passed'] else 'FAIL'}  "
                      f"schrodinger = {r['residual']['schrodinger_residual']:.2e}  "
                      f"field = {r['residual']['field_residual']:.2e}  bc = {r['residual']['bc_residual']:.2e}")
            print("all verdicts pass" if code == EXIT_SOLVED else "verification failed")
            return code
        if args.command == "export":
            for path in cmd_export(args.report, args.format, args.output):
                print(path)
            return EXIT_SOLVED
        if args.command == "eigen":
            print(f"{'k':>3}  {'lambda_k':>18}  {'lambda_k/pi^2':>14}  {'residual':>9}")
            for k, lam, res in cmd_eigen(args.config, args.count):
                print(f"{k:>3}  {lam:>18.12g}  {lam / math.pi**2:>14.8f}  {res:>9.1e}")
            return EXIT_SOLVED
        if args.command == "geometry":
            print(json.dumps(cmd_geometry(args.config), indent=2))
            return EXIT_SOLVED
    except (ConfigError, FieldFileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - exit-code contract
        logger.exception("unexpected failure")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
