"""
Lagrangian stress lab: command-line entry point.
Subcommands: solve | verify | compare.

Exit status: 0 success, 1 a verification check failed, 2 bad config or
unknown check, 3 Picard non-convergence, 4 invariant violation or blow-up.
"""
import argparse
import logging
import sys
from pathlib import Path

from analysis.norms import composite_norms
from analysis.presets import build_initial_data
from analysis.verify import (check_cross_validation, cross_validation_levels, resolve_checks,
                             run_checks)
from config import load_run_config
from errors import LabError, NonConvergenceError
from lagrangian.solver import SolverConfig, picard_solve
from spectral.grid import GridSpec
from storage.reports import (write_bound_reports, write_differences, write_history,
                             write_norm_reports, write_summary)
from storage.run_dir import artifact_path, get_run_dir, open_run
from storage.snapshots import write_path_frames

logger = logging.getLogger("lab")


def _setup(args):
    rc = load_run_config(args.config, out_dir=args.out, seed=args.seed)
    open_run(Path(rc.output_dir), rc.to_dict())
    grid = GridSpec(rc.d, rc.n, rc.L)
    sc = SolverConfig.from_run_config(rc)
    u0, sigma0 = build_initial_data(rc, grid, sc.model)
    return rc, sc, u0, sigma0


def _report_lines(reports) -> list[str]:
    lines = [r.summary_line() for r in reports]
    lines += [f"  {r.bound_name}: {reason}" for r in reports
              for reason in r.details.get("failures", [])]
    return lines


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Subcommands
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def cmd_solve(args) -> int:
    """Picard solve; snapshots, convergence history and the NormReport row."""
    rc, sc, u0, sigma0 = _setup(args)
    logger.info("solve: %s / %s, d=%d n=%d T=%g M=%d", rc.model, rc.branch, rc.d, rc.n, rc.T, rc.M)
    try:
        result = picard_solve(sc, u0, sigma0)
    except NonConvergenceError as exc:
        write_history(get_run_dir(), exc.history)
        raise

    write_history(get_run_dir(), result.history)
    snaps = artifact_path("snapshots")
    write_path_frames(snaps, "u", result.u)
    write_path_frames(snaps, "sigma", result.sigma)
    write_path_frames(snaps, "chi", result.state.chi)
    write_path_frames(snaps, "tau", result.state.tau)

    report = composite_norms(result.state.chi, result.state.tau, sc.params,
                             dv=result.state.v, du0=u0, delta=result.delta)
    write_norm_reports(artifact_path("norms.csv"), [(sc.time_grid.T, report)])
    last = result.history[-1]
    write_summary(artifact_path("summary.txt"), [
        f"model {rc.model} branch {rc.branch}",
        f"converged in {result.iterations} iteration(s), final distance {last.distance:.3e}",
        f"P = {report.P:.6g}  M = {report.M:.6g}  N = {report.N:.6g}",
    ])
    logger.info("converged in %d iteration(s)", result.iterations)
    return 0


def cmd_verify(args) -> int:
    """Run one named check (or all); nonzero when any report fails."""
    names = resolve_checks(args.check)
    rc, _, _, _ = _setup(args)
    reports = run_checks(names, rc)
    write_bound_reports(artifact_path("checks"), reports)
    for r in reports:
        for n, series in r.details.get("series", {}).items():
            write_differences(artifact_path("checks", f"{r.bound_name}_n{n}_differences.csv"), series)
    lines = _report_lines(reports)
    write_summary(artifact_path("summary.txt"), lines)
    for line in lines:
        logger.info(line)
    return 0 if all(r.passed for r in reports) else 1


def cmd_compare(args) -> int:
    """Lagrangian solver against the Eulerian reference at every refinement level."""
    rc, _, _, _ = _setup(args)
    report = check_cross_validation(cross_validation_levels(rc), substeps=rc.substeps)
    for n, series in report.details["series"].items():
        write_differences(artifact_path(f"differences_n{n}.csv"), series)
    lines = _report_lines([report])
    write_summary(artifact_path("summary.txt"), lines)
    if not report.passed:
        logger.warning(lines[0])
    return 0


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description=__doc__.splitlines()[1])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON run file")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, help="seed for random families (overrides the config)")
    parser.add_argument("--check", default="all", help="verify: check name or 'all'")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="[%(name)s] %(message)s", force=True)
    try:
        return COMMANDS[args.command](args)
    except LabError as exc:
        logger.error("%s", exc)
        return exc.exit_status
    except ValueError as exc:
        logger.error("invalid input: %s", exc)
        return 2


if __name__ == "__main__":
    print("🌀  Lagrangian stress lab starting …")
    sys.exit(main())
