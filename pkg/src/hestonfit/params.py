"""Model parameters and market context."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: Canonical parameter ordering used by gradients, Jacobians and the calibrator.
PARAM_NAMES = ("v0", "v_bar", "rho", "kappa", "sigma")


@dataclass(frozen=True)
class HestonParams:
    """The five variance-process parameters, ordered (v0, v_bar, rho, kappa, sigma).

    v0 is the initial variance, v_bar the long-term variance (both per-year),
    rho the correlation between the spot and variance drivers, kappa the
    mean-reversion rate (1/year) and sigma the volatility of variance.
    """

    v0: float
    v_bar: float
    rho: float
    kappa: float
    sigma: float

    def __post_init__(self) -> None:
        for name in ("v0", "v_bar", "kappa", "sigma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name}={value!r} must be positive and finite")
        if not (math.isfinite(self.rho) and -1.0 < self.rho < 1.0):
            raise DomainError(f"rho={self.rho!r} must lie strictly inside (-1, 1)")

    def to_array(self) -> np.ndarray:
        """Parameter vector in the canonical ordering."""
        return np.array([self.v0, self.v_bar, self.rho, self.kappa, self.sigma])

    @classmethod
    def from_array(cls, theta) -> "HestonParams":
        v0, v_bar, rho, kappa, sigma = (float(x) for x in theta)
        return cls(v0=v0, v_bar=v_bar, rho=rho, kappa=kappa, sigma=sigma)


@dataclass(frozen=True)
class MarketContext:
    """Spot price and continuously compounded interest rate."""

    spot: float
    rate: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.spot) and self.spot > 0.0):
            raise DomainError(f"spot={self.spot!r} must be positive and finite")
        if not math.isfinite(self.rate):
            raise DomainError(f"rate={self.rate!r} must be finite")

    def forward(self, t: float) -> float:
        """Forward price for maturity t (year-fraction)."""
        return self.spot * math.exp(self.rate * t)

    def discount(self, t: float) -> float:
        return math.exp(-self.rate * t)
