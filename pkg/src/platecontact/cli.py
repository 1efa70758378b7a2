"""Command-line entry point: ``platecontact solve <config> [options]``.

Exit status is 0 on success, 2 when the scenario is invalid (the message
names the offending ``section.key``), 3 when a solve fails and 1 when the
outputs cannot be written.  Set ``PLATECONTACT_LOG`` (DEBUG, INFO, WARNING)
to control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .assembly import PenaltyRule
from .config import ConfigError, Scenario, load_scenario
from .export import ExportError, _fmt, export_fields
from .poisson import (q1_error_norms, q1_reference_errors,
                      solve_poisson_dirichlet_nitsche, solve_poisson_signorini_nitsche)
from .postprocess import (ConvergenceTable, ShearProfile, convergence_sweep, error_norms,
                          extract_shear_profile, self_errors, sinsin_solution)
from .mesh import refine_uniform
from .solver import (ContactState, Loads, SolveReport, SolverError, solve_plate_bilateral,
                     solve_plate_signorini)

log = logging.getLogger("platecontact")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


@dataclass
class Outcome:
    mesh: object
    u: np.ndarray
    state: ContactState | None
    report: SolveReport
    profile: ShearProfile | None


def _linear_report(n_dofs: int) -> SolveReport:
    return SolveReport(iterations=1, terminated_by="linear_solve", n_dofs=n_dofs)


def solve_scenario(sc: Scenario, mesh=None, body=None, source=None) -> Outcome:
    """Run the scenario's solve on ``mesh`` (the scenario mesh by default).

    ``body`` replaces the plate pressure and ``source`` the Poisson right-hand
    side; sweeps use them for manufactured data.
    """
    mesh = mesh or sc.mesh()
    if sc.is_plate:
        penalty = PenaltyRule(sc.plate_gamma0())
        loads = Loads(body=body) if body is not None else Loads(point=sc.point_loads, q=sc.q)
        if sc.problem == "plate_signorini":
            u, state, report = solve_plate_signorini(mesh, sc.material, sc.boundary, penalty,
                                                     loads, sc.solver)
        else:
            u = solve_plate_bilateral(mesh, sc.material, sc.boundary, penalty, loads)
            state, report = None, _linear_report(len(u))
        profile = extract_shear_profile(mesh, sc.material, u,
                                        sc.boundary if state is not None else None, penalty)
        return Outcome(mesh, u, state, report, profile)
    f = sc.q if source is None else source
    if sc.problem == "poisson_dirichlet":
        u = solve_poisson_dirichlet_nitsche(mesh, f, None, sc.poisson_gamma0(), sc.boundary)
        return Outcome(mesh, u, None, _linear_report(len(u)), None)
    opts = sc.solver if sc.solver.init == "zero" else replace(sc.solver, init="zero")
    u, state, report = solve_poisson_signorini_nitsche(mesh, f, None, sc.poisson_gamma0(),
                                                       sc.boundary, opts)
    return Outcome(mesh, u, state, report, None)


def _manufactured(sc: Scenario):
    """Manufactured data u = sin(pi x/a) sin(pi y/a) on the square (0, a)^2."""
    a = sc.extents[0]
    if tuple(sc.origin) != (0.0, 0.0) or sc.extents[0] != sc.extents[1]:
        raise ConfigError("output.sweep_reference",
                          "the manufactured reference needs a square domain at the origin")
    allowed = ("simply_supported", "signorini") if sc.is_plate else ("dirichlet", "simply_supported",
                                                                      "clamped", "signorini")
    for side in ("bottom", "right", "top", "left"):
        bc = sc.boundary[side]
        if bc.kind not in allowed or bc.g != 0.0:
            raise ConfigError(f"boundary.{side}", "the manufactured reference needs "
                              f"{' or '.join(allowed)} sides with g = 0")
    _, second, k = sinsin_solution(a)
    if sc.is_plate:
        D_std = sc.material.D_std
        body = lambda x, y: 4 * k**4 * D_std * np.sin(k * x) * np.sin(k * y)  # noqa: E731
        errors = lambda mesh, u: error_norms(mesh, sc.material, u, second)  # noqa: E731
        return {"body": body}, errors

    def exact(x, y):
        return (np.sin(k * x) * np.sin(k * y), k * np.cos(k * x) * np.sin(k * y),
                k * np.sin(k * x) * np.cos(k * y))

    source = lambda x, y: 2 * k * k * np.sin(k * x) * np.sin(k * y)  # noqa: E731
    return {"source": source}, lambda mesh, u: q1_error_norms(mesh, u, exact)


def run_sweep(sc: Scenario, levels: int) -> ConvergenceTable:
    if levels < 3:
        raise ConfigError("output.sweep", "a sweep needs at least 3 levels")
    if sc.sweep_reference == "manufactured":
        data, errors = _manufactured(sc)
    else:
        data = {}
        finest = sc.mesh()
        for _ in range(levels):
            finest = refine_uniform(finest)
        ref = solve_scenario(sc, finest)
        errors = (self_errors(sc.material, finest, ref.u) if sc.is_plate
                  else q1_reference_errors(finest, ref.u))

    def solve(mesh):
        out = solve_scenario(sc, mesh, **data)
        return out.u, out.report.iterations

    return convergence_sweep(sc.mesh(), levels, solve, errors)


def _summary(out: Outcome) -> dict:
    mesh, u = out.mesh, out.u
    values = u[:: len(u) // mesh.n_nodes]
    res = {"max_value": float(values.max()), "min_value": float(values.min())}
    if out.profile is not None:
        k = out.profile.argmax_abs()
        res["shear_max_abs"] = float(abs(out.profile.T[k]))
        res["shear_argmax_s"] = float(out.profile.s[k])
        res["shear_argmax_xy"] = [float(out.profile.x[k]), float(out.profile.y[k])]
    if out.state is not None and len(out.state):
        st = out.state
        res["contact_points"] = len(st)
        res["active_points"] = int(st.active.sum())
        res["lambda_min"] = float(st.lam.min())
        res["lambda_max"] = float(st.lam.max())
        res["kkt_residual"] = st.kkt_residual(float(np.abs(values).max()))
    return res


def _report_text(sc: Scenario, out: Outcome | None, table: ConvergenceTable | None,
                 artifacts: dict, error: str | None = None) -> str:
    lines = [f"problem: {sc.problem}", f"mesh:    {sc.nx} x {sc.ny}"]
    if error:
        lines.append(f"error:   {error}")
    if out is not None:
        lines += ["", out.report.summary(), ""]
        for key, value in _summary(out).items():
            lines.append(f"{key}: {value}")
    if table is not None:
        lines += ["", "convergence:", table.format()]
    if artifacts:
        lines += ["", "artifacts:"] + [f"  {k}: {v}" for k, v in sorted(artifacts.items())]
    return "\n".join(lines) + "\n"


def _write_table(table: ConvergenceTable, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["h", "error_l2", "rate_l2", "error_energy", "rate_energy", "iterations"])
        for row, its in zip(table.rows(), table.iterations):
            w.writerow([_fmt(v) for v in row] + [its])
    return path


def _finite(values):
    """JSON has no NaN; undefined rates become null."""
    return [v if np.isfinite(v) else None for v in values]


def _write_reports(sc: Scenario, outdir: Path, out, table, artifacts, error=None,
                   failed: SolveReport | None = None):
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        if table is not None:
            artifacts["convergence"] = _write_table(table, outdir / "convergence.csv").name
        doc = {"scenario": sc.as_dict(), "artifacts": artifacts}
        if error:
            doc["error"] = error
        if failed is not None:
            doc["solve"] = failed.as_dict()
        if out is not None:
            doc["solve"] = out.report.as_dict()
            doc["results"] = _summary(out)
        if table is not None:
            doc["convergence"] = {"h": table.h, "error_l2": table.error_l2,
                                  "error_energy": table.error_energy,
                                  "rate_l2": _finite(table.rate_l2),
                                  "rate_energy": _finite(table.rate_energy),
                                  "iterations": table.iterations}
        (outdir / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        text = _report_text(sc, out, table, artifacts, error)
        if failed is not None:
            text += "\n" + failed.summary() + "\n"
        (outdir / "report.txt").write_text(text)
    except OSError as exc:
        raise ExportError(f"cannot write reports to {outdir}: {exc}") from exc


def run(config, overrides=(), sweep: int | None = None, out: str | None = None) -> int:
    """Load, solve, export.  Returns the process exit status."""
    try:
        sc = load_scenario(config, overrides)
        if sweep is not None:
            sc = replace(sc, sweep=sweep)
        if out is not None:
            sc = replace(sc, out_dir=out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(sc.out_dir)
    try:
        try:
            result = solve_scenario(sc)
            table = run_sweep(sc, sc.sweep) if sc.sweep else None
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except SolverError as exc:
            print(f"solver error: {exc}", file=sys.stderr)
            if exc.report is not None:
                print(exc.report.summary(), file=sys.stderr)
            _write_reports(sc, outdir, None, None, {}, str(exc), exc.report)
            return EXIT_SOLVER
        artifacts = {k: Path(v).name for k, v in
                     export_fields(result.mesh, result.u, result.profile, outdir, sc.grid).items()}
        _write_reports(sc, outdir, result, table, artifacts)
    except ExportError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(_report_text(sc, result, table, artifacts), end="")
    return EXIT_OK


def _configure_logging():
    level = os.environ.get("PLATECONTACT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="platecontact",
                                     description="Kirchhoff plate and Poisson contact solver")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="solve a scenario file")
    p.add_argument("config", help="scenario file (INI sections)")
    p.add_argument("--sweep", type=int, default=None, metavar="N",
                   help="also run an N-level uniform refinement sweep")
    p.add_argument("--out", default=None, metavar="DIR", help="output directory")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="SECTION.KEY=VALUE", help="override a scenario key (repeatable)")
    return parser


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    return run(args.config, args.overrides, args.sweep, args.out)


if __name__ == "__main__":
    sys.exit(main())
