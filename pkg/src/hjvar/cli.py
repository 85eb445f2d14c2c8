"""Command line interface: solve, compare, validate, wavefront.

Exit codes: 0 success, 1 validation failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, load_problem
from .operators import IterationSchedule
from .runner import MODES, ModeError, export, run_solve
from .validate import SUITES, run_validate
from .viscosity_fd import convergence_study, FDConfig


def _build_parser():
    p = argparse.ArgumentParser(
        prog="hjvar",
        description="Variational and viscosity solvers for 1-d evolutive "
                    "Hamilton-Jacobi problems")
    sub = p.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one solver mode on a problem file")
    solve.add_argument("--config", required=True)
    solve.add_argument("--mode", default="iterated", choices=MODES)
    solve.add_argument("--out", default=None)
    solve.add_argument("--format", default="csv", choices=("csv", "json"))

    comp = sub.add_parser("compare",
                          help="iterated operator vs monotone reference study")
    comp.add_argument("--config", required=True)
    comp.add_argument("--out", default=None)
    comp.add_argument("--deltas", default=None,
                      help="comma-separated schedule steps (default: halvings "
                           "of schedule_delta)")

    val = sub.add_parser("validate", help="run a verification suite")
    val.add_argument("--suite", default="all", choices=sorted(SUITES))
    val.add_argument("--out", default=None)

    wf = sub.add_parser("wavefront", help="characteristic front export")
    wf.add_argument("--config", required=True)
    wf.add_argument("--out", default=None)
    wf.add_argument("--format", default="csv", choices=("csv", "json"))
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            cfg = load_problem(args.config)
            result = run_solve(cfg, args.mode)
            if args.out:
                export(result, args.format, args.out)
            else:
                t, g = result.snapshots[-1]
                print(f"mode={result.mode} t={t:g} grid=[{g.origin:g},{g.hi:g}] "
                      f"h={g.h:g} lip={g.lip:.6g}")
            return 0

        if args.command == "compare":
            cfg = load_problem(args.config)
            base = cfg.schedule_delta or cfg.horizon
            if args.deltas:
                deltas = [float(x) for x in args.deltas.split(",")]
            else:
                deltas = [base, base / 2, base / 4]
            window = (cfg.domain[0] / 2, cfg.domain[1] / 2)
            schedules = [IterationSchedule.uniform(0.0, cfg.horizon, d)
                         for d in deltas]
            rep = convergence_study(cfg.hamiltonian, cfg.u0, 0.0, cfg.horizon,
                                    schedules, cfg.operator, cfg.fd, window)
            payload = json.dumps(rep, indent=1, sort_keys=True, default=float)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(payload + "\n")
            else:
                print(payload)
            return 0

        if args.command == "validate":
            report = run_validate(args.suite)
            payload = json.dumps(report, indent=1, sort_keys=True)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(payload + "\n")
            for r in report["records"]:
                status = "PASS" if r["passed"] else "FAIL"
                print(f"{status} {r['name']}: measured={r['measured']:.6g} "
                      f"bound={r['bound']:.6g}")
            print(f"suite={report['suite']} passed={report['passed']} "
                  f"runtime={report['runtime_s']:.1f}s")
            return 0 if report["passed"] else 1

        if args.command == "wavefront":
            cfg = load_problem(args.config)
            result = run_solve(cfg, "wavefront")
            if args.out:
                export(result, args.format, args.out)
            else:
                fr = result.front
                print(f"front times={list(fr.times)} "
                      f"branches={[int(b.max()) + 1 for b in fr.branch]}")
            return 0
    except (ConfigError, ModeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
