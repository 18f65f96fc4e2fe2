"""Black-Scholes pricing, greeks, implied volatility and delta-strike conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from scipy.special import ndtr, ndtri

from .errors import DomainError, NoSolutionError
from .pricer import OptionType

_VOL_LO = 1e-12
_VOL_HI = 10.0


class DeltaConvention(Enum):
    SPOT_DELTA = "spot"


@dataclass(frozen=True)
class BsQuote:
    """A delta-quoted implied volatility point (spot-delta convention)."""

    implied_vol: float
    delta: float
    delta_convention: DeltaConvention = DeltaConvention.SPOT_DELTA

    def __post_init__(self) -> None:
        if not self.implied_vol > 0.0:
            raise DomainError("implied_vol must be positive")
        if not 0.0 < abs(self.delta) < 1.0:
            raise DomainError("|delta| must lie in (0, 1)")


def _d1(spot: float, rate: float, strike: float, maturity: float, vol: float) -> float:
    return ((math.log(spot / strike) + (rate + 0.5 * vol * vol) * maturity)
            / (vol * math.sqrt(maturity)))


def bs_price(spot: float, rate: float, strike: float, maturity: float,
             vol: float, option_type: OptionType = OptionType.CALL) -> float:
    if min(spot, strike, maturity, vol) <= 0.0:
        raise DomainError("spot, strike, maturity and vol must be positive")
    d1 = _d1(spot, rate, strike, maturity, vol)
    d2 = d1 - vol * math.sqrt(maturity)
    df = math.exp(-rate * maturity)
    call = spot * ndtr(d1) - strike * df * ndtr(d2)
    if option_type is OptionType.CALL:
        return float(call)
    return float(call - spot + strike * df)


def bs_delta(spot: float, rate: float, strike: float, maturity: float,
             vol: float, option_type: OptionType = OptionType.CALL) -> float:
    """Spot delta: N(d1) for calls, N(d1) - 1 for puts."""
    d1 = _d1(spot, rate, strike, maturity, vol)
    n = float(ndtr(d1))
    return n if option_type is OptionType.CALL else n - 1.0


def bs_vega(spot: float, rate: float, strike: float, maturity: float,
            vol: float) -> float:
    d1 = _d1(spot, rate, strike, maturity, vol)
    return float(spot * math.sqrt(maturity) * math.exp(-0.5 * d1 * d1) / math.sqrt(2.0 * math.pi))


def price_bounds(spot: float, rate: float, strike: float, maturity: float,
                 option_type: OptionType) -> tuple[float, float]:
    """Static no-arbitrage band (lower, upper) for a vanilla price."""
    df = math.exp(-rate * maturity)
    if option_type is OptionType.CALL:
        return max(0.0, spot - strike * df), spot
    return max(0.0, strike * df - spot), strike * df


def implied_vol(price: float, spot: float, rate: float, strike: float,
                maturity: float, option_type: OptionType = OptionType.CALL) -> float:
    """Volatility reproducing the given price, by safeguarded Newton.

    Newton steps use the analytic vega and fall back to bisection of the
    maintained bracket whenever they stall or escape it; converges to price
    residuals near machine precision within 100 iterations.
    """
    lo_p, hi_p = price_bounds(spot, rate, strike, maturity, option_type)
    if not (lo_p < price < hi_p):
        raise NoSolutionError(
            f"price {price!r} outside the no-arbitrage band ({lo_p!r}, {hi_p!r})"
        )
    v_lo, v_hi = _VOL_LO, _VOL_HI
    # initial guess: at-the-money expansion, clipped into the bracket
    guess = math.sqrt(2.0 * math.pi / maturity) * max(price, 1e-10) / spot
    v = min(max(guess, 1e-3), 5.0)
    tol = 1e-14 * max(1.0, price)
    f = bs_price(spot, rate, strike, maturity, v, option_type) - price
    for _ in range(100):
        if abs(f) <= tol:
            return v
        if f > 0.0:
            v_hi = v
        else:
            v_lo = v
        vega = bs_vega(spot, rate, strike, maturity, v)
        if vega > 1e-300:
            v_new = v - f / vega
        else:
            v_new = math.nan
        if not (v_lo < v_new < v_hi):
            v_new = 0.5 * (v_lo + v_hi)
        if v_new == v:
            break
        v = v_new
        f = bs_price(spot, rate, strike, maturity, v, option_type) - price
    if abs(f) <= 1e-12 * max(1.0, price):
        return v
    raise NoSolutionError(
        f"implied volatility did not converge (residual {f!r} at vol {v!r})"
    )


def strike_from_delta(delta: float, vol: float, spot: float, rate: float,
                      maturity: float,
                      option_type: OptionType = OptionType.CALL) -> float:
    """Invert the spot-delta formula for the strike."""
    if option_type is OptionType.CALL:
        if not 0.0 < delta < 1.0:
            raise DomainError("call delta must lie in (0, 1)")
        d1 = float(ndtri(delta))
    else:
        if not -1.0 < delta < 0.0:
            raise DomainError("put delta must lie in (-1, 0)")
        d1 = float(ndtri(1.0 + delta))
    if min(vol, spot, maturity) <= 0.0:
        raise DomainError("vol, spot and maturity must be positive")
    return float(spot * math.exp(-d1 * vol * math.sqrt(maturity)
                                 + (rate + 0.5 * vol * vol) * maturity))
