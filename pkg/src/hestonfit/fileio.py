"""Plain-text document formats for parameters, chains, reports and dumps.

Parameter files are `key = value` lines; chain files are comma-separated with
a mandatory header row and document-level `spot` / `rate` lines above it.
All numbers are written with 17 significant digits so write/read round-trips
are bit-faithful.
"""

from __future__ import annotations

import csv
import io
import math
from typing import Iterable, TextIO

import numpy as np

from . import blackscholes as bs
from .calibrator import CalibrationReport
from .errors import FileFormatError, NoSolutionError
from .harness import TRADING_DAYS_PER_YEAR, ValidationStats
from .params import HestonParams, MarketContext
from .pricer import OptionSpec, OptionType, Quote, QuoteChain

FMT = "%.17g"

CHAIN_COLUMNS = ("maturity_days", "strike", "delta", "option_type", "quote_kind", "quote")


def _fmt(x: float) -> str:
    return FMT % x


# ---------------------------------------------------------------- parameters

def write_params(stream: TextIO, params: HestonParams,
                 market: MarketContext | None = None) -> None:
    for key in ("kappa", "v_bar", "sigma", "rho", "v0"):
        stream.write(f"{key} = {_fmt(getattr(params, key))}\n")
    if market is not None:
        stream.write(f"spot = {_fmt(market.spot)}\n")
        stream.write(f"rate = {_fmt(market.rate)}\n")


def read_params(stream: TextIO) -> tuple[HestonParams, MarketContext | None]:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FileFormatError(f"line {lineno}: expected 'key = value'")
        key, _, text = line.partition("=")
        key = key.strip()
        try:
            values[key] = float(text.strip())
        except ValueError as exc:
            raise FileFormatError(f"line {lineno}: bad number {text.strip()!r}") from exc
    missing = {"kappa", "v_bar", "sigma", "rho", "v0"} - values.keys()
    if missing:
        raise FileFormatError(f"missing parameter keys: {sorted(missing)}")
    params = HestonParams(v0=values["v0"], v_bar=values["v_bar"], rho=values["rho"],
                          kappa=values["kappa"], sigma=values["sigma"])
    market = None
    if "spot" in values or "rate" in values:
        market = MarketContext(spot=values.get("spot", 1.0), rate=values.get("rate", 0.0))
    return params, market


def write_params_file(path, params: HestonParams,
                      market: MarketContext | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_params(fh, params, market)


def read_params_file(path) -> tuple[HestonParams, MarketContext | None]:
    with open(path, "r", encoding="utf-8") as fh:
        return read_params(fh)


# --------------------------------------------------------------------- chains

def write_chain(stream: TextIO, chain: QuoteChain, quote_kind: str = "price",
                deltas: Iterable[float | None] | None = None) -> None:
    """Serialise a chain; rows are strike-quoted unless deltas are supplied.

    quote_kind 'price' stores observed prices, 'vol' stores implied vols
    (vol rows require every quote to carry one).
    """
    if quote_kind not in ("price", "vol"):
        raise FileFormatError("quote_kind must be 'price' or 'vol'")
    stream.write(f"spot = {_fmt(chain.market.spot)}\n")
    stream.write(f"rate = {_fmt(chain.market.rate)}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CHAIN_COLUMNS)
    delta_list = list(deltas) if deltas is not None else [None] * len(chain)
    if len(delta_list) != len(chain):
        raise FileFormatError("deltas must match the number of quotes")
    for q, delta in zip(chain.quotes, delta_list):
        days = q.spec.maturity * TRADING_DAYS_PER_YEAR
        days_txt = str(int(round(days)))
        if quote_kind == "vol":
            if q.implied_vol is None:
                raise FileFormatError("vol-quoted output needs implied vols on every quote")
            quote_val = q.implied_vol
        else:
            quote_val = q.price
        if delta is None:
            row = [days_txt, _fmt(q.spec.strike), "",
                   q.spec.option_type.name, quote_kind.upper(), _fmt(quote_val)]
        else:
            row = [days_txt, "", _fmt(delta),
                   q.spec.option_type.name, quote_kind.upper(), _fmt(quote_val)]
        writer.writerow(row)


def read_chain(stream: TextIO) -> QuoteChain:
    """Parse a chain document, resolving delta-quoted rows to strikes."""
    spot = 1.0
    rate = 0.0
    text_rows: list[list[str]] = []
    header_seen = False
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen and "=" in line and "," not in line:
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in ("spot", "rate"):
                raise FileFormatError(f"line {lineno}: unknown document key {key!r}")
            try:
                if key == "spot":
                    spot = float(value.strip())
                else:
                    rate = float(value.strip())
            except ValueError as exc:
                raise FileFormatError(f"line {lineno}: bad number for {key}") from exc
            continue
        cells = next(csv.reader(io.StringIO(line)))
        if not header_seen:
            if tuple(c.strip() for c in cells) != CHAIN_COLUMNS:
                raise FileFormatError(
                    f"line {lineno}: header must be {','.join(CHAIN_COLUMNS)}")
            header_seen = True
            continue
        text_rows.append([c.strip() for c in cells])
    if not header_seen:
        raise FileFormatError("missing chain header row")
    if not text_rows:
        raise FileFormatError("chain has no quote rows")
    market = MarketContext(spot=spot, rate=rate)
    quotes = []
    for i, cells in enumerate(text_rows, start=1):
        if len(cells) != len(CHAIN_COLUMNS):
            raise FileFormatError(f"quote row {i}: expected {len(CHAIN_COLUMNS)} cells")
        days_txt, strike_txt, delta_txt, type_txt, kind_txt, quote_txt = cells
        try:
            days = int(days_txt)
            quote = float(quote_txt)
        except ValueError as exc:
            raise FileFormatError(f"quote row {i}: bad number") from exc
        if (strike_txt == "") == (delta_txt == ""):
            raise FileFormatError(f"quote row {i}: exactly one of strike/delta required")
        if quote < 0:
            raise FileFormatError(f"quote row {i}: quote must be non-negative")
        try:
            otype = OptionType[type_txt.upper()]
        except KeyError as exc:
            raise FileFormatError(f"quote row {i}: option_type must be CALL or PUT") from exc
        kind = kind_txt.upper()
        if kind not in ("PRICE", "VOL"):
            raise FileFormatError(f"quote row {i}: quote_kind must be PRICE or VOL")
        t = days / TRADING_DAYS_PER_YEAR
        try:
            quotes.append(_resolve_row(market, t, strike_txt, delta_txt, otype, kind, quote))
        except (NoSolutionError, ValueError) as exc:
            raise FileFormatError(f"quote row {i}: {exc}") from exc
    return QuoteChain(market, tuple(quotes))


def _resolve_row(market: MarketContext, t: float, strike_txt: str, delta_txt: str,
                 otype: OptionType, kind: str, quote: float) -> Quote:
    s0, r = market.spot, market.rate
    if strike_txt != "":
        strike = float(strike_txt)
        if kind == "PRICE":
            return Quote(OptionSpec(strike, t, otype), quote, None)
        price = bs.bs_price(s0, r, strike, t, quote, otype)
        return Quote(OptionSpec(strike, t, otype), price, quote)
    delta = float(delta_txt)
    if kind == "VOL":
        strike = bs.strike_from_delta(delta, quote, s0, r, t, otype)
        price = bs.bs_price(s0, r, strike, t, quote, otype)
        return Quote(OptionSpec(strike, t, otype), price, quote)
    # delta-quoted price: iterate strike -> implied vol -> strike
    vol = 0.25
    strike = bs.strike_from_delta(delta, vol, s0, r, t, otype)
    for _ in range(100):
        vol = bs.implied_vol(quote, s0, r, strike, t, otype)
        strike_new = bs.strike_from_delta(delta, vol, s0, r, t, otype)
        if abs(strike_new - strike) <= 1e-10 * s0:
            strike = strike_new
            break
        strike = strike_new
    else:
        raise NoSolutionError("delta/price row did not resolve to a strike")
    vol = bs.implied_vol(quote, s0, r, strike, t, otype)
    return Quote(OptionSpec(strike, t, otype), quote, vol)


def write_chain_file(path, chain: QuoteChain, quote_kind: str = "price",
                     deltas: Iterable[float | None] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_chain(fh, chain, quote_kind, deltas)


def read_chain_file(path) -> QuoteChain:
    with open(path, "r", encoding="utf-8") as fh:
        return read_chain(fh)


# ------------------------------------------------------------------ documents

def write_report(stream: TextIO, report: CalibrationReport) -> None:
    p = report.theta_final
    for key in ("kappa", "v_bar", "sigma", "rho", "v0"):
        stream.write(f"{key} = {_fmt(getattr(p, key))}\n")
    stream.write(f"residual_norm = {_fmt(report.residual_norm)}\n")
    stream.write(f"grad_inf_norm = {_fmt(report.grad_inf_norm)}\n")
    stream.write(f"last_step_norm = {_fmt(report.last_step_norm)}\n")
    stream.write(f"stop_reason = {report.stop_reason.name}\n")
    stream.write(f"iterations = {report.iterations}\n")
    stream.write(f"n_price_evals = {report.n_price_evals}\n")
    stream.write(f"n_gradient_evals = {report.n_gradient_evals}\n")
    stream.write(f"n_linear_solves = {report.n_linear_solves}\n")
    stream.write(f"wall_time = {_fmt(report.wall_time)}\n")


def write_trace_csv(stream: TextIO, report: CalibrationReport) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["v0", "v_bar", "rho", "kappa", "sigma",
                     "r_norm", "mu", "accepted"])
    for e in report.trace:
        writer.writerow([_fmt(x) for x in e.theta]
                        + [_fmt(e.r_norm), _fmt(e.mu), int(e.accepted)])


def write_validation_stats(stream: TextIO, stats: ValidationStats) -> None:
    stream.write(f"n_cases = {stats.n_cases}\n")
    stream.write(f"n_success = {stats.n_success}\n")
    stream.write(f"success_rate = {_fmt(stats.success_rate)}\n")
    for name, value in stats.mean_abs_dev.items():
        stream.write(f"mean_abs_dev_{name} = {_fmt(value)}\n")
    stream.write(f"mean_iterations = {_fmt(stats.mean_iterations)}\n")
    stream.write(f"mean_price_evals = {_fmt(stats.mean_price_evals)}\n")
    stream.write(f"mean_gradient_evals = {_fmt(stats.mean_gradient_evals)}\n")
    stream.write(f"mean_linear_solves = {_fmt(stats.mean_linear_solves)}\n")
    stream.write(f"mean_wall_time = {_fmt(stats.mean_wall_time)}\n")
    if not math.isnan(stats.mean_residual_norm):
        stream.write(f"mean_residual_norm = {_fmt(stats.mean_residual_norm)}\n")


def write_table(stream: TextIO, header: Iterable[str],
                rows: Iterable[Iterable]) -> None:
    """Delimited dump table with a single header row; NaNs stay literal."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x
                         for x in row])
