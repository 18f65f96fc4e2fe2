"""Command-line interface: pricing, gradient checks, calibration, validation
and figure-data dumps.

Exit statuses: 0 success, 1 check failure, 2 usage error, 3 input-format
error, 4 numeric domain error, 5 non-convergence (iteration limit).
"""

from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager

import numpy as np

from . import fileio
from .calibrator import LmOptions, StopReason, calibrate
from .errors import (DomainError, EvaluationOverflowError, FileFormatError,
                     HestonError, NoSolutionError)
from .gradient import fd_gradient, price_gradient
from .harness import (DEFAULT_MATURITIES_DAYS, TRADING_DAYS_PER_YEAR,
                      SurfaceGrid, dump_contour, dump_integrand_convergence,
                      generate_surface, quadrature_error_study, run_validation)
from .params import HestonParams, MarketContext
from .pricer import OptionSpec, price_chain
from .quadrature import RuleKind, make_rule

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_DOMAIN = 4
EXIT_NO_CONVERGENCE = 5

_DEMO_PARAMS = HestonParams(v0=0.08, v_bar=0.1, rho=-0.8, kappa=3.0, sigma=0.25)
_DEMO_MARKET = MarketContext(spot=1.0, rate=0.02)
_REPRESENTATIVE_START = HestonParams(v0=0.2, v_bar=0.2, rho=-0.6, kappa=1.2, sigma=0.3)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--nodes", type=int, default=64, help="quadrature nodes")
    parser.add_argument("--umax", type=float, default=200.0, help="integration bound")
    parser.add_argument("--rule", choices=["gl", "tr"], default="gl",
                        help="quadrature rule")
    parser.add_argument("--tol", type=float, default=1e-10,
                        help="stopping tolerances (all three)")
    parser.add_argument("--max-iter", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--bounds", choices=["on", "off"], default="off",
                        help="project iterates onto the sampling box")
    parser.add_argument("--strict-paper-lm", action="store_true",
                        help="keep damping unchanged on accepted steps")
    parser.add_argument("--rep", choices=["cui", "schoutens", "heston", "delbano"],
                        default="cui", help="characteristic-function form")
    parser.add_argument("--out", type=str, default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hestonfit",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price every option in a chain file")
    p.add_argument("--params", required=True)
    p.add_argument("--chain", required=True)
    _add_common(p)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradient")
    p.add_argument("--params", default=None)
    p.add_argument("--epsilon", type=float, default=1e-4)
    _add_common(p)

    p = sub.add_parser("calibrate", help="fit parameters to a chain file")
    p.add_argument("--chain", required=True)
    p.add_argument("--start", default=None, help="params file with the initial guess")
    p.add_argument("--trace-out", default=None, help="write the iteration trace CSV here")
    _add_common(p)

    p = sub.add_parser("validate", help="randomized recovery campaign")
    p.add_argument("--optima", type=int, default=20)
    p.add_argument("--guesses", type=int, default=20)
    p.add_argument("--full", action="store_true",
                   help="run the 100x100 campaign regardless of --optima/--guesses")
    _add_common(p)

    p = sub.add_parser("surface", help="generate a delta-pinned surface file")
    p.add_argument("--params", required=True)
    p.add_argument("--quote-kind", choices=["vol", "price"], default="vol")
    p.add_argument("--pin", choices=["term", "spot"], default="spot",
                   help="delta convention pinning the pillar strikes")
    _add_common(p)

    p = sub.add_parser("dump-contour", help="residual-norm landscape over a pair")
    p.add_argument("--params", required=True)
    p.add_argument("--pair", default="kappa,v_bar")
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--half-width", type=float, default=0.5)
    p.add_argument("--start", default=None, help="overlay the iteration path from here")
    _add_common(p)

    p = sub.add_parser("dump-integrand", help="integrand traces and truncation bounds")
    p.add_argument("--params", required=True)
    p.add_argument("--maturities", default=",".join(str(d) for d in DEFAULT_MATURITIES_DAYS),
                   help="comma-separated maturities in trading days")
    p.add_argument("--strike", type=float, default=1.1)
    p.add_argument("--integrand-tol", type=float, default=1e-8)
    _add_common(p)

    p = sub.add_parser("dump-quaderr", help="quadrature error sweep vs a dense reference")
    p.add_argument("--params", required=True)
    p.add_argument("--n-sweep", default="10,20,30,40,50,60,70,80,90,100")
    p.add_argument("--n-max", type=int, default=1000)
    p.add_argument("--study-umax", type=float, default=None,
                   help="common truncation for the sweep (default: reference level; "
                        "pass 0 for per-option adaptive bounds)")
    _add_common(p)

    return parser


@contextmanager
def _out_stream(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _rule_from(args):
    return make_rule(RuleKind(args.rule), args.nodes, args.umax)


def _options_from(args) -> LmOptions:
    bounds = None
    if args.bounds == "on":
        from .harness import PARAM_RANGES
        bounds = np.array([PARAM_RANGES["v0"], PARAM_RANGES["v_bar"],
                           PARAM_RANGES["rho"], PARAM_RANGES["kappa"],
                           PARAM_RANGES["sigma"]])
    return LmOptions(eps1=args.tol, eps2=args.tol, eps3=args.tol,
                     max_iterations=args.max_iter, bounds=bounds,
                     rule=_rule_from(args), strict_paper=args.strict_paper_lm)


def _load_params(path, default_market=_DEMO_MARKET):
    params, market = fileio.read_params_file(path)
    return params, (market or default_market)


def _cmd_price(args) -> int:
    from .charfn import Representation

    params, market = _load_params(args.params)
    chain = fileio.read_chain_file(args.chain)
    rule = _rule_from(args)
    prices = price_chain(params, chain, rule, rep=Representation(args.rep))
    with _out_stream(args.out) as fh:
        fileio.write_table(
            fh, ("maturity_days", "strike", "option_type", "model_price"),
            ((int(round(q.spec.maturity * TRADING_DAYS_PER_YEAR)), q.spec.strike,
              q.spec.option_type.name, p)
             for q, p in zip(chain.quotes, prices)))
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    if args.params is not None:
        params, market = _load_params(args.params)
    else:
        params, market = _DEMO_PARAMS, _DEMO_MARKET
    rule = _rule_from(args)
    rows = []
    worst = 0.0
    for strike in (0.9, 1.0, 1.1):
        for t in (0.5, 1.0):
            spec = OptionSpec(strike * market.spot, t)
            g_ana = price_gradient(params, market, spec, rule).to_array()
            g_fd = fd_gradient(params, market, spec, rule, args.epsilon).to_array()
            denom = np.maximum(np.maximum(np.abs(g_ana), np.abs(g_fd)), 1e-8)
            rel = float(np.max(np.abs(g_ana - g_fd) / denom))
            worst = max(worst, rel)
            rows.append((int(round(t * TRADING_DAYS_PER_YEAR)), spec.strike, rel))
    passed = worst < 1e-4
    with _out_stream(args.out) as fh:
        fileio.write_table(fh, ("maturity_days", "strike", "max_rel_error"), rows)
        fh.write(f"# max_rel_error = {worst:.3e}\n")
        fh.write(f"# {'PASS' if passed else 'FAIL'} at 1e-4\n")
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def _cmd_calibrate(args) -> int:
    chain = fileio.read_chain_file(args.chain)
    if args.start is not None:
        theta0, _ = fileio.read_params_file(args.start)
    else:
        theta0 = _REPRESENTATIVE_START
    report = calibrate(chain, theta0, _options_from(args))
    with _out_stream(args.out) as fh:
        fileio.write_report(fh, report)
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            fileio.write_trace_csv(fh, report)
    if report.stop_reason is StopReason.MAX_ITER:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _cmd_validate(args) -> int:
    n_i, n_j = (100, 100) if args.full else (args.optima, args.guesses)
    stats = run_validation(n_i, n_j, seed=args.seed, opts=_options_from(args))
    with _out_stream(args.out) as fh:
        fileio.write_validation_stats(fh, stats)
    return EXIT_OK


def _cmd_surface(args) -> int:
    from .harness import DeltaPin

    params, market = _load_params(args.params)
    grid = SurfaceGrid()
    chain = generate_surface(params, market, grid, _rule_from(args),
                             pin=DeltaPin(args.pin))
    with _out_stream(args.out) as fh:
        fileio.write_chain(fh, chain, quote_kind=args.quote_kind)
    return EXIT_OK


def _cmd_dump_contour(args) -> int:
    params, market = _load_params(args.params)
    pair = tuple(p.strip() for p in args.pair.split(","))
    chain = generate_surface(params, market, None, _rule_from(args))
    theta0 = None
    if args.start is not None:
        theta0, _ = fileio.read_params_file(args.start)
    dump = dump_contour(params, pair, chain, grid_size=args.grid,
                        half_widths=(args.half_width, args.half_width),
                        rule=_rule_from(args), theta0=theta0,
                        opts=_options_from(args) if theta0 is not None else None)
    with _out_stream(args.out) as fh:
        fileio.write_table(
            fh, (dump.names[0], dump.names[1], "r_norm"),
            ((x, y, dump.r_norms[iy, ix])
             for iy, y in enumerate(dump.y) for ix, x in enumerate(dump.x)))
        if dump.path.size:
            fh.write("# iteration path\n")
            fileio.write_table(fh, (f"path_{dump.names[0]}", f"path_{dump.names[1]}"),
                               ((p[0], p[1]) for p in dump.path))
    return EXIT_OK


def _cmd_dump_integrand(args) -> int:
    params, market = _load_params(args.params)
    days = [int(d) for d in args.maturities.split(",") if d]
    specs = [OptionSpec(args.strike, d / TRADING_DAYS_PER_YEAR) for d in days]
    traces = dump_integrand_convergence(params, market, specs, tol=args.integrand_tol)
    with _out_stream(args.out) as fh:
        for trace in traces:
            d = int(round(trace.spec.maturity * TRADING_DAYS_PER_YEAR))
            fh.write(f"# maturity_days = {d}, u_bar = {trace.u_bar}, "
                     f"capped = {int(trace.capped)}\n")
            fileio.write_table(
                fh, ("u", "price_integrand", "g_v0", "g_v_bar", "g_rho",
                     "g_kappa", "g_sigma"),
                ((trace.u_grid[k], *trace.values[:, k])
                 for k in range(trace.u_grid.size)))
    return EXIT_OK


def _cmd_dump_quaderr(args) -> int:
    from .harness import STUDY_U_MAX

    params, market = _load_params(args.params)
    chain = generate_surface(params, market, None, make_rule())
    sweep = [int(n) for n in args.n_sweep.split(",") if n]
    if args.study_umax is None:
        study_umax = STUDY_U_MAX
    elif args.study_umax == 0:
        study_umax = None  # per-option adaptive truncation
    else:
        study_umax = args.study_umax
    with _out_stream(args.out) as fh:
        fileio.write_table(
            fh, ("rule", "n_nodes", "price_mean", "price_max", "price_min",
                 "grad_mean", "grad_max", "grad_min"),
            ((row.kind.value, row.n_nodes, row.price_mean, row.price_max,
              row.price_min, row.grad_mean, row.grad_max, row.grad_min)
             for kind in (RuleKind.GAUSS_LEGENDRE, RuleKind.TRAPEZOID)
             for row in quadrature_error_study(params, chain, kind, sweep,
                                               n_max=args.n_max, u_max=study_umax)))
    return EXIT_OK


_COMMANDS = {
    "price": _cmd_price,
    "gradcheck": _cmd_gradcheck,
    "calibrate": _cmd_calibrate,
    "validate": _cmd_validate,
    "surface": _cmd_surface,
    "dump-contour": _cmd_dump_contour,
    "dump-integrand": _cmd_dump_integrand,
    "dump-quaderr": _cmd_dump_quaderr,
}


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except FileFormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (DomainError, NoSolutionError, EvaluationOverflowError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except HestonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
