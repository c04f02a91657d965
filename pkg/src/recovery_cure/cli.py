"""Command-line interface.

Exit codes: 0 success, 1 input or usage error, 2 statistical degeneracy
(unidentifiable group, non-convergence, singular Hessian).
"""
import argparse
import contextlib
import json
import sys

from . import __version__
from .errors import RecoveryCureError, UnidentifiableError
from .estimation import FitOptions, Optimizer, fit_mle, fit_stratified
from .portfolio import (
    DEFAULT_HORIZON,
    PartitionSpec,
    Segments,
    load_portfolio,
    segment,
    summarize,
    write_portfolio,
    write_summary,
)
from .promotion import ModelParams
from .report import (
    fit_report,
    load_fit_params,
    non_recovery_curves,
    parse_group_literal,
    plot_curves,
    plot_km_comparison,
    survival_table,
    write_curves,
    write_fit_report,
)
from .simulation import SimulationSpec, simulate_portfolio

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DEGENERATE = 2

ALL_LABEL = "ALL"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _report_error("UsageError", message)
        raise SystemExit(EXIT_INPUT)


def _report_error(kind, message, **extra):
    payload = {"error": kind, "message": message}
    payload.update({k: v for k, v in extra.items() if v is not None})
    print(json.dumps(payload), file=sys.stderr)


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _groups(portfolio, partition):
    if partition is None:
        return Segments({ALL_LABEL: portfolio.observations()}, 0)
    return segment(portfolio, PartitionSpec.parse(partition))


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _params_source(args):
    params = {}
    if args.params:
        params.update(load_fit_params(args.params))
    for literal in args.group or []:
        label, p = parse_group_literal(literal)
        params[label] = p
    if not params:
        raise argparse.ArgumentTypeError("give --params REPORT.json or at least one --group")
    return params


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------


def cmd_simulate(args):
    p = ModelParams.from_values(args.theta, args.shape, args.scale)
    spec = SimulationSpec(p, args.n, args.horizon, args.seed, args.fx_bs, args.fx_cv,
                          args.id_prefix)
    portfolio = simulate_portfolio(spec)
    with _output(args.output) as fh:
        write_portfolio(portfolio, fh)
    msg = f"censored fraction: {portfolio.censored_fraction:.6f}"
    print(msg, file=sys.stderr if args.output in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_fit(args):
    portfolio = load_portfolio(args.input, args.horizon)
    groups = _groups(portfolio, args.partition)
    opts = FitOptions(
        max_iterations=args.max_iterations,
        multistart_count=args.multistart,
        optimizer=args.optimizer,
        seed=args.seed,
    )
    if len(groups) == 1 or args.baseline == "separate":
        baseline = "single" if len(groups) == 1 else "separate"
        fits = {}
        for label, obs in groups.items():
            try:
                fits[label] = fit_mle(obs, opts)
            except UnidentifiableError as exc:
                fits[label] = f"group {label}: {exc}"
        report = fit_report(fits, portfolio.horizon_months, baseline)
    else:
        try:
            strat = fit_stratified(dict(groups), opts)
        except UnidentifiableError as exc:
            _report_error("UnidentifiableError", str(exc))
            return EXIT_DEGENERATE
        report = fit_report(strat, portfolio.horizon_months, "shared")

    if args.output:
        write_fit_report(report, f"{args.output}.json", f"{args.output}.csv")
    else:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")
    if args.plot:
        fitted = {g["label"]: ModelParams.from_values(g["theta"], g["shape"], g["scale"])
                  for g in report["groups"] if "theta" in g}
        plot_km_comparison(groups, fitted, args.plot, portfolio.horizon_months)

    for g in report["groups"]:
        if g["degenerate"] or not g["converged"]:
            print(f"warning: group {g['label']}: {g.get('message') or 'degenerate fit'}",
                  file=sys.stderr)
    if report["degenerate"] or not report["converged"]:
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_survival_table(args):
    params = _params_source(args)
    observed = None
    if args.data:
        portfolio = load_portfolio(args.data, args.horizon)
        observed = _groups(portfolio, args.partition)
        if len(params) == 1 and len(observed) == 1:
            # a single fitted group lines up with a single data group whatever the labels
            observed = {next(iter(params)): next(iter(observed.values()))}
    table = survival_table(params, args.horizons, observed)
    with _output(args.output) as fh:
        table.write_csv(fh)
    return EXIT_OK


def cmd_curves(args):
    params = _params_source(args)
    series = non_recovery_curves(params, args.step, args.horizon)
    with _output(args.output) as fh:
        write_curves(series, fh)
    if args.figure:
        plot_curves(series, args.figure)
    return EXIT_OK


def cmd_summary(args):
    portfolio = load_portfolio(args.input, args.horizon)
    groups = segment(portfolio, PartitionSpec.parse(args.partition)) if args.partition else {}
    rows = [summarize(f"Population: {len(portfolio)}", portfolio.survival_data())]
    rows += [summarize(label, obs) for label, obs in groups.items()]
    with _output(args.output) as fh:
        write_summary(rows, fh)
    return EXIT_OK


# ----------------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------------


def _add_params_source(p):
    p.add_argument("--params", metavar="REPORT.json", help="fit report written by 'fit'")
    p.add_argument("--group", action="append", metavar="LABEL:THETA,SHAPE,SCALE",
                   help="literal parameters for one group (repeatable)")


def build_parser():
    parser = _Parser(prog="recovery-cure", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="draw a synthetic portfolio")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--shape", type=float, default=1.0)
    p.add_argument("--scale", type=float, default=18.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--horizon", type=float, default=DEFAULT_HORIZON)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fx-bs", type=int, default=1)
    p.add_argument("--fx-cv", type=int, default=1)
    p.add_argument("--id-prefix", default="C")
    p.add_argument("--output", "-o", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="maximum-likelihood fit per segment")
    p.add_argument("input")
    p.add_argument("--partition", help="e.g. 'fx_cv=1,2' or 'fx_cv=1,2;fx_bs=1,2'")
    p.add_argument("--horizon", type=float, default=DEFAULT_HORIZON)
    p.add_argument("--baseline", choices=("shared", "separate"), default="shared",
                   help="share one Weibull baseline across groups (default) or fit each alone")
    p.add_argument("--optimizer", choices=[o.value for o in Optimizer],
                   default=Optimizer.QUASI_NEWTON.value)
    p.add_argument("--multistart", type=int, default=5)
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", metavar="PREFIX",
                   help="write PREFIX.json and PREFIX.csv (default: JSON to stdout)")
    p.add_argument("--plot", metavar="PATH", help="Kaplan-Meier vs model figure (svg, png, pdf)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("survival-table", help="non-recovery percentages at fixed horizons")
    _add_params_source(p)
    p.add_argument("--horizons", type=_float_list, default=[12.0, 18.0, 24.0])
    p.add_argument("--data", help="portfolio CSV for the observed % unrecovered column")
    p.add_argument("--partition")
    p.add_argument("--horizon", type=float, default=DEFAULT_HORIZON)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_survival_table)

    p = sub.add_parser("curves", help="non-recovery curves on a uniform grid")
    _add_params_source(p)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--horizon", type=float, default=DEFAULT_HORIZON)
    p.add_argument("--output", "-o")
    p.add_argument("--figure", "--svg", dest="figure", metavar="PATH",
                   help="also render the curves (format from suffix, e.g. .svg)")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("summary", help="recovered / unrecovered counts per segment")
    p.add_argument("input")
    p.add_argument("--partition")
    p.add_argument("--horizon", type=float, default=DEFAULT_HORIZON)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_summary)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnidentifiableError as exc:
        _report_error(type(exc).__name__, str(exc))
        return EXIT_DEGENERATE
    except RecoveryCureError as exc:
        _report_error(type(exc).__name__, str(exc), line=getattr(exc, "line", None),
                      field=getattr(exc, "field", None))
        return EXIT_INPUT
    except argparse.ArgumentTypeError as exc:
        _report_error("UsageError", str(exc))
        return EXIT_INPUT
    except OSError as exc:
        _report_error("IOError", str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
