"""Command-line front end.

Subcommands: fit, test, ci, limit-table, level-study, ecdf-study.  All
output is machine readable (JSON to stdout by default), and every
randomized command is deterministic given --seed.

Exit codes: 0 success, 2 input or data error, 3 numeric failure,
4 critical-value table missing or unreadable.  The table defaults to the
packaged one; --table or the CONCREG_TABLE environment variable override
it.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from importlib import resources

import numpy as np

from .certify import check_alse
from .data import Design, PiecewiseLinearConcave, read_design
from .estimators import fit_alse
from .inference import confidence_interval, lr_test
from .limit import CriticalTable, critical_table
from .studies import (
    _BENCHMARKS,
    Scenario,
    ecdf_study,
    level_study,
    write_ecdf_csv,
    write_level_csv,
)

ENV_TABLE = "CONCREG_TABLE"
_DEFAULT_TABLE = "tables/dee_default.csv"


class _MissingTable(Exception):
    pass


def _load_table(path_arg: str | None) -> CriticalTable:
    if path_arg:
        path = path_arg
    elif os.environ.get(ENV_TABLE):
        path = os.environ[ENV_TABLE]
    else:
        path = str(resources.files("concreg").joinpath(_DEFAULT_TABLE))
    try:
        return CriticalTable.from_csv(path)
    except (OSError, ValueError) as exc:
        raise _MissingTable(
            f"critical-value table unusable at {path}: {exc}"
        ) from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _oriented_design(args) -> Design:
    design = read_design(args.input)
    if args.convex:
        design = Design(design.x, -design.y)
    return design


def cmd_fit(args) -> int:
    design = _oriented_design(args)
    result = fit_alse(design)
    sign = -1.0 if args.convex else 1.0
    values_out = sign * result.fit.values
    payload = {
        "knots": [float(v) for v in result.fit.knots],
        "values": [float(v) for v in values_out],
        "objective": result.objective,
        "sigma2_hat": result.sigma2_hat,
        "convex": bool(args.convex),
    }
    if args.certify:
        report = check_alse(design, result.fit)
        payload["certification"] = report.to_json()
        if not report.passed:
            print("certification failed", file=sys.stderr)
            return 3
    if args.format == "csv":
        text = _csv_text(
            ["knot", "value"],
            [(repr(k), repr(v)) for k, v in zip(payload["knots"], payload["values"])],
        )
    else:
        text = _json(payload)
    _emit(text, args.out)
    return 0


def _check_fit_json(path, design: Design, convex: bool) -> str:
    with open(path, encoding="utf-8") as fh:
        stored = json.load(fh)
    knots = np.asarray(stored["knots"], dtype=float)
    values = np.asarray(stored["values"], dtype=float)
    if convex:
        values = -values
    loaded = PiecewiseLinearConcave(knots, values)
    ours = fit_alse(design).fit
    scale = max(1.0, float(np.max(np.abs(ours.values))))
    if loaded.knots.size != ours.knots.size or np.any(loaded.knots != ours.knots):
        raise RuntimeError(f"stored fit in {path} has different knots")
    if float(np.max(np.abs(loaded.values - ours.values))) > 1e-8 * scale:
        raise RuntimeError(f"stored fit in {path} disagrees with the solver")
    return "pass"


def cmd_test(args) -> int:
    design = _oriented_design(args)
    y0 = -args.y0 if args.convex else args.y0
    table = _load_table(args.table)
    decision = lr_test(
        design, args.x0, y0, table, alpha=args.alpha, sigma2=args.sigma2
    )
    payload = {
        "x0": args.x0,
        "y0": args.y0,
        "statistic": decision.statistic,
        "threshold": decision.threshold,
        "p_value": decision.p_value,
        "sigma2": decision.sigma2_used,
        "alpha": decision.alpha,
        "decision": "reject" if decision.reject else "fail_to_reject",
        "identity_gap": decision.result.identity_gap,
        "convex": bool(args.convex),
    }
    if args.check_fit:
        payload["fit_check"] = _check_fit_json(args.check_fit, design, args.convex)
    if args.format == "csv":
        header = ["statistic", "threshold", "p_value", "sigma2", "alpha", "decision"]
        row = [repr(payload[h]) if h != "decision" else payload[h] for h in header]
        text = _csv_text(header, [row])
    else:
        text = _json(payload)
    _emit(text, args.out)
    return 0


def cmd_ci(args) -> int:
    design = read_design(args.input)
    table = _load_table(args.table)
    ci = confidence_interval(
        design,
        args.x0,
        table,
        alpha=args.alpha,
        sigma2=args.sigma2,
        points=args.points,
        convex=args.convex,
    )
    oriented = Design(design.x, -design.y) if args.convex else design
    sigma2 = args.sigma2 if args.sigma2 is not None else fit_alse(oriented).sigma2_hat
    payload = {
        "x0": args.x0,
        "interval": [ci.lower, ci.upper],
        "alpha": ci.alpha,
        "sigma2": sigma2,
        "convex": bool(args.convex),
        "warnings": list(ci.messages),
    }
    if args.out:
        grid_text = _csv_text(
            ["y0", "accepted"],
            [(repr(float(g)), int(a)) for g, a in zip(ci.grid, ci.accepted)],
        )
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(grid_text)
    if args.format == "csv":
        text = _csv_text(
            ["lower", "upper", "alpha", "sigma2"],
            [[repr(ci.lower), repr(ci.upper), repr(ci.alpha), repr(sigma2)]],
        )
    else:
        text = _json(payload)
    sys.stdout.write(text)
    return 0


def cmd_limit_table(args) -> int:
    if not args.out:
        print("--out is required for limit-table", file=sys.stderr)
        return 2
    table = critical_table(
        M=args.M, c=args.c, h=args.h, b=args.b, seed=args.seed, n_jobs=args.jobs
    )
    table.to_csv(args.out)
    summary = {
        "M": table.M,
        "c": table.c,
        "h": table.h,
        "b": table.b,
        "seed": table.seed,
        "q90": table.quantile(0.90),
        "q95": table.quantile(0.95),
        "q99": table.quantile(0.99),
        "path": str(args.out),
    }
    sys.stdout.write(_json(summary))
    return 0


def _scenario_from_args(args, name: str) -> Scenario:
    return Scenario(
        name=name,
        n=args.n,
        design=args.design,
        sigma=args.sigma,
        M=args.M,
        x0=args.x0,
    )


def cmd_level_study(args) -> int:
    table = _load_table(args.table)
    scenario = _scenario_from_args(args, args.scenario)
    alphas = args.alpha or [0.05, 0.10]
    estimates = level_study(
        scenario,
        alphas,
        table,
        seed=args.seed,
        n_jobs=args.jobs,
        known_sigma=not args.plugin_sigma,
    )
    if args.out:
        write_level_csv(scenario, estimates, args.out)
    payload = {
        "scenario": scenario.name,
        "n": scenario.n,
        "design": scenario.design,
        "M": scenario.M,
        "known_sigma": not args.plugin_sigma,
        "levels": [
            {"alpha": e.alpha, "rate": e.rate, "se": e.se} for e in estimates
        ],
    }
    sys.stdout.write(_json(payload))
    return 0


def cmd_ecdf_study(args) -> int:
    table = _load_table(args.table)
    names = args.scenario or sorted(_BENCHMARKS)
    scenarios = [
        Scenario(name=name, n=args.n, design=args.design, sigma=args.sigma, M=args.M)
        for name in names
    ]
    study = ecdf_study(scenarios, table, seed=args.seed, n_jobs=args.jobs)
    if args.out:
        write_ecdf_csv(study, args.out)
    labels = sorted(study.curves)
    pairwise = {}
    for i, a in enumerate(labels):
        for b in labels[i + 1 :]:
            pairwise[f"{a}|{b}"] = study.sup_distance(a, b)
    payload = {
        "labels": labels,
        "pairwise_sup_distance": pairwise,
        "chisq1_sup_distance": {
            lab: study.sup_distance_chisq1(lab) for lab in labels
        },
    }
    sys.stdout.write(_json(payload))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="concreg",
        description="Concave regression fits, pointwise tests, and intervals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common_io(p):
        p.add_argument("--out", help="write the primary output to this path")
        p.add_argument(
            "--format", choices=["json", "csv"], default="json",
            help="stdout/primary output format",
        )

    p_fit = sub.add_parser("fit", help="unconstrained concave (or convex) fit")
    p_fit.add_argument("--input", required=True, help="two-column x,y CSV")
    p_fit.add_argument("--convex", action="store_true")
    p_fit.add_argument("--certify", action="store_true",
                       help="attach the optimality certificate")
    common_io(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_test = sub.add_parser("test", help="pointwise likelihood-ratio test")
    p_test.add_argument("--input", required=True)
    p_test.add_argument("--x0", type=float, required=True)
    p_test.add_argument("--y0", type=float, required=True)
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--sigma2", type=float, default=None,
                        help="known noise variance; default: plug-in estimate")
    p_test.add_argument("--table", help="critical-value table CSV")
    p_test.add_argument("--convex", action="store_true")
    p_test.add_argument("--check-fit", dest="check_fit",
                        help="fit JSON from `concreg fit` to cross-check")
    common_io(p_test)
    p_test.set_defaults(func=cmd_test)

    p_ci = sub.add_parser("ci", help="confidence interval for r(x0)")
    p_ci.add_argument("--input", required=True)
    p_ci.add_argument("--x0", type=float, required=True)
    p_ci.add_argument("--alpha", type=float, default=0.05)
    p_ci.add_argument("--sigma2", type=float, default=None)
    p_ci.add_argument("--table")
    p_ci.add_argument("--convex", action="store_true")
    p_ci.add_argument("--points", type=int, default=201)
    p_ci.add_argument("--out", help="write the acceptance-grid CSV here")
    p_ci.add_argument("--format", choices=["json", "csv"], default="json")
    p_ci.set_defaults(func=cmd_ci)

    p_tab = sub.add_parser("limit-table", help="simulate a critical-value table")
    p_tab.add_argument("--M", type=int, required=True)
    p_tab.add_argument("--seed", type=int, default=0)
    p_tab.add_argument("--c", type=float, default=4.0)
    p_tab.add_argument("--h", type=float, default=0.005)
    p_tab.add_argument("--b", type=float, default=3.0)
    p_tab.add_argument("--jobs", type=int, default=1)
    p_tab.add_argument("--out", required=True, help="destination CSV")
    p_tab.set_defaults(func=cmd_limit_table)

    def study_common(p):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--design", choices=["fixed", "random"], default="fixed")
        p.add_argument("--sigma", type=float, default=1.0)
        p.add_argument("--M", type=int, default=1000)
        p.add_argument("--table")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", help="destination CSV")

    p_lvl = sub.add_parser("level-study", help="Monte Carlo test levels")
    p_lvl.add_argument("--scenario", required=True, choices=sorted(_BENCHMARKS))
    study_common(p_lvl)
    p_lvl.add_argument("--x0", type=float, default=None)
    p_lvl.add_argument("--alpha", type=float, action="append",
                       help="repeatable; default 0.05 and 0.10")
    p_lvl.add_argument("--plugin-sigma", dest="plugin_sigma", action="store_true",
                       help="use the per-replication variance estimate")
    p_lvl.set_defaults(func=cmd_level_study)

    p_ecdf = sub.add_parser("ecdf-study", help="null-statistic ECDF curves")
    p_ecdf.add_argument("--scenario", action="append", choices=sorted(_BENCHMARKS),
                        help="repeatable; default: all benchmarks")
    study_common(p_ecdf)
    p_ecdf.set_defaults(func=cmd_ecdf_study)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _MissingTable as exc:
        print(str(exc), file=sys.stderr)
        return 4
    except (ValueError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(str(exc), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
