"""scikit-learn style estimator wrapping the calibrator.

X rows describe options as (strike, maturity_years[, is_call]); y holds the
observed prices.  After fitting, predict returns model prices for arbitrary
option rows, so the calibrator composes with pipelines, grid search and
cross-validation utilities.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .calibrator import LmOptions, calibrate
from .params import HestonParams, MarketContext
from .pricer import OptionSpec, OptionType, Quote, QuoteChain, price_chain
from .quadrature import RuleKind, make_rule


def _rows_to_specs(X: np.ndarray) -> list[OptionSpec]:
    specs = []
    for row in X:
        otype = OptionType.CALL
        if X.shape[1] >= 3 and row[2] == 0:
            otype = OptionType.PUT
        specs.append(OptionSpec(float(row[0]), float(row[1]), otype))
    return specs


class HestonCalibrator(RegressorMixin, BaseEstimator):
    """Least-squares fit of the five variance-process parameters to prices.

    Parameters double as the starting point of the Levenberg-Marquardt search
    (v0, v_bar, rho, kappa, sigma) and as solver configuration.  Fitted state
    lives in params_ (the calibrated parameter set) and report_ (the full
    iteration record).

    Examples
    --------
    >>> X = [[1.0, 0.5, 1], [1.1, 0.5, 1], [1.0, 1.0, 1], [1.1, 1.0, 0],
    ...      [0.9, 1.0, 0], [1.2, 2.0, 1]]
    >>> y = [0.093, 0.048, 0.125, 0.138, 0.045, 0.088]
    >>> est = HestonCalibrator(spot=1.0, rate=0.02).fit(X, y)  # doctest: +SKIP
    >>> est.predict([[0.9, 1.0, 1]])                           # doctest: +SKIP
    """

    def __init__(self, v0: float = 0.2, v_bar: float = 0.2, rho: float = -0.6,
                 kappa: float = 1.2, sigma: float = 0.3, spot: float = 1.0,
                 rate: float = 0.0, n_nodes: int = 64, u_max: float = 200.0,
                 rule_kind: str = "gl", tol: float = 1e-10, max_iter: int = 100,
                 bounds=None, strict_paper: bool = False):
        self.v0 = v0
        self.v_bar = v_bar
        self.rho = rho
        self.kappa = kappa
        self.sigma = sigma
        self.spot = spot
        self.rate = rate
        self.n_nodes = n_nodes
        self.u_max = u_max
        self.rule_kind = rule_kind
        self.tol = tol
        self.max_iter = max_iter
        self.bounds = bounds
        self.strict_paper = strict_paper

    def _validate_options(self, X, y=None):
        X = check_array(X, ensure_min_features=2, ensure_2d=True, dtype=float)
        if X.shape[1] > 3:
            raise ValueError("X must have columns (strike, maturity[, is_call])")
        if y is not None:
            y = check_array(y, ensure_2d=False, dtype=float)
            if y.ndim != 1 or y.shape[0] != X.shape[0]:
                raise ValueError("y must be one price per option row")
        return X, y

    def _market(self) -> MarketContext:
        return MarketContext(spot=self.spot, rate=self.rate)

    def _options(self) -> LmOptions:
        rule = make_rule(RuleKind(self.rule_kind), self.n_nodes, self.u_max)
        bounds = None if self.bounds is None else np.asarray(self.bounds, dtype=float)
        return LmOptions(eps1=self.tol, eps2=self.tol, eps3=self.tol,
                         max_iterations=self.max_iter, bounds=bounds,
                         rule=rule, strict_paper=self.strict_paper)

    def fit(self, X, y):
        """Calibrate to option rows X and observed prices y."""
        X, y = self._validate_options(X, y)
        market = self._market()
        quotes = tuple(Quote(spec, float(p))
                       for spec, p in zip(_rows_to_specs(X), y))
        chain = QuoteChain(market, quotes)
        theta0 = HestonParams(v0=self.v0, v_bar=self.v_bar, rho=self.rho,
                              kappa=self.kappa, sigma=self.sigma)
        report = calibrate(chain, theta0, self._options())
        self.params_ = report.theta_final
        self.report_ = report
        self.n_iter_ = report.iterations
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """Model prices for option rows X under the fitted parameters."""
        check_is_fitted(self, "params_")
        X, _ = self._validate_options(X)
        quotes = tuple(Quote(spec, 0.0) for spec in _rows_to_specs(X))
        chain = QuoteChain(self._market(), quotes)
        rule = make_rule(RuleKind(self.rule_kind), self.n_nodes, self.u_max)
        return price_chain(self.params_, chain, rule)
