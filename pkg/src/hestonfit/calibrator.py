"""Levenberg-Marquardt calibration of the model to an option chain.

Minimises f(theta) = ||r(theta)||^2 / 2 with r = model - market prices.  The
damped normal equations (J J^T + mu I) dtheta = -J r are solved with a 5x5
symmetric factorisation; steps are accepted when both the predicted reduction
delta_L = dtheta . (mu dtheta - J r) and the actual reduction
delta_F = ||r_k|| - ||r_{k+1}|| are positive.  On acceptance the damping
follows the Marquardt-Nielsen update mu <- mu max(1/3, 1 - (2 rho_g - 1)^3)
with gain ratio rho_g = delta_F / delta_L (a strict mode keeps mu unchanged
instead); on rejection mu <- mu nu, nu <- 2 nu.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import DomainError, SingularSystemError
from .gradient import jacobian
from .params import HestonParams
from .pricer import QuoteChain, price_chain
from .quadrature import QuadratureRule, default_rule

#: Hard floor keeping trial iterates priceable: positive-part parameters stay
#: above this and |rho| at most RHO_CAP.  Trials outside are rejected as if
#: the actual reduction were non-positive.
HARD_FLOOR = 1e-8
RHO_CAP = 0.999

#: Default deviation thresholds (per-parameter, canonical ordering) under
#: which a calibration is considered to have recovered a known optimum.
SUCCESS_THRESHOLDS = np.array([1e-3, 1e-3, 1e-3, 1e-2, 1e-3])


class StopReason(Enum):
    RESIDUAL = "residual"
    GRADIENT = "gradient"
    STEP = "step"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class LmOptions:
    """Damping scale, stopping tolerances and iteration/search-space limits."""

    tau: float = 1e-3
    eps1: float = 1e-10
    eps2: float = 1e-10
    eps3: float = 1e-10
    max_iterations: int = 100
    bounds: np.ndarray | None = None  # (5, 2) lower/upper, canonical ordering
    rule: QuadratureRule | None = None
    strict_paper: bool = False

    def __post_init__(self) -> None:
        for name in ("tau", "eps1", "eps2", "eps3"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be at least 1")
        if self.bounds is not None:
            b = np.asarray(self.bounds, dtype=float)
            if b.shape != (5, 2) or np.any(b[:, 0] >= b[:, 1]):
                raise DomainError("bounds must be (5, 2) with positive width")
            object.__setattr__(self, "bounds", b)


@dataclass(frozen=True)
class TraceEntry:
    theta: np.ndarray
    r_norm: float
    mu: float
    accepted: bool


@dataclass(frozen=True)
class LmState:
    """One iteration's view of the damped least-squares subproblem."""

    mu: float
    nu: float
    theta: HestonParams
    r: np.ndarray
    J: np.ndarray

    def __post_init__(self) -> None:
        if not self.mu > 0.0:
            raise DomainError("mu must be positive")
        if not self.nu >= 2.0:
            raise DomainError("nu must be at least 2")


@dataclass(frozen=True)
class CalibrationReport:
    theta_final: HestonParams
    residual_norm: float
    grad_inf_norm: float
    last_step_norm: float
    stop_reason: StopReason
    iterations: int
    n_price_evals: int
    n_gradient_evals: int
    n_linear_solves: int
    trace: tuple[TraceEntry, ...]
    wall_time: float


def residual_vector(params: HestonParams, chain: QuoteChain,
                    rule: QuadratureRule | None = None) -> tuple[np.ndarray, float]:
    """Residuals r_i = model price - market price and f = ||r||^2 / 2."""
    rule = rule or default_rule()
    r = price_chain(params, chain, rule) - chain.prices()
    return r, 0.5 * float(r @ r)


def _solve_damped(H: np.ndarray, g: np.ndarray, mu: float) -> np.ndarray:
    """Solve (H + mu I) x = -g by a symmetric factorisation, escalating mu
    through a few retries before declaring the system singular."""
    mu_try = mu
    for _ in range(6):
        a = H + mu_try * np.eye(H.shape[0])
        try:
            x = scipy.linalg.solve(a, -g, assume_a="pos")
        except np.linalg.LinAlgError:
            try:
                x = scipy.linalg.solve(a, -g, assume_a="sym")
            except np.linalg.LinAlgError:
                mu_try *= 10.0
                continue
        if np.all(np.isfinite(x)):
            return x
        mu_try *= 10.0
    raise SingularSystemError("damped normal equations could not be solved")


def lm_step(state: LmState) -> np.ndarray:
    """The damped step dtheta solving (J J^T + mu I) dtheta = -J r.

    A descent direction whenever J r != 0: dtheta . (J r) < 0.
    """
    jr = state.J @ state.r
    h = state.J @ state.J.T
    return _solve_damped(h, jr, state.mu)


def gauss_newton_hessian(J: np.ndarray) -> tuple[np.ndarray, float]:
    """J J^T and its condition number (via singular values of J).

    Rank-deficient Jacobians report an infinite condition number.
    """
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise DomainError("Jacobian must be finite")
    h = J @ J.T
    s = np.linalg.svd(J, compute_uv=False)
    rank_tol = s[0] * max(J.shape) * np.finfo(float).eps if s.size else 0.0
    if s.size == 0 or s[-1] <= rank_tol:
        return h, math.inf
    return h, float((s[0] / s[-1]) ** 2)


def _theta_admissible(theta: np.ndarray) -> bool:
    v0, v_bar, rho, kappa, sigma = theta
    return (v0 >= HARD_FLOOR and v_bar >= HARD_FLOOR and kappa >= HARD_FLOOR
            and sigma >= HARD_FLOOR and abs(rho) <= RHO_CAP)


def calibrate(chain: QuoteChain, theta0: HestonParams,
              opts: LmOptions | None = None) -> CalibrationReport:
    """Fit the five parameters to the chain, reporting the full iteration trace.

    Every linear solve produces one trial point; trials are priced unless the
    relative step size already satisfies the stagnation test, and rejected
    trials (including ones leaving the admissible domain, which are never
    priced) escalate the damping.  The Jacobian is refreshed only on accepted
    steps whose residual still exceeds the residual tolerance.
    """
    opts = opts or LmOptions()
    rule = opts.rule or default_rule()
    bounds = opts.bounds
    theta = theta0.to_array()
    if bounds is not None and (np.any(theta < bounds[:, 0]) or np.any(theta > bounds[:, 1])):
        raise DomainError("theta0 violates the supplied bounds")

    t_start = time.perf_counter()
    trace: list[TraceEntry] = []
    r, _ = residual_vector(theta0, chain, rule)
    n_price = 1
    r_norm = float(np.linalg.norm(r))
    J = jacobian(theta0, chain, rule)
    n_grad = 1
    n_solves = 0
    iterations = 0
    last_step_norm = math.nan
    jr = J @ r
    ones = np.ones(len(chain))
    grad_inf = float(np.max(np.abs(J @ ones)))

    def report(reason: StopReason) -> CalibrationReport:
        return CalibrationReport(
            theta_final=HestonParams.from_array(theta),
            residual_norm=r_norm,
            grad_inf_norm=grad_inf,
            last_step_norm=last_step_norm,
            stop_reason=reason,
            iterations=iterations,
            n_price_evals=n_price,
            n_gradient_evals=n_grad,
            n_linear_solves=n_solves,
            trace=tuple(trace),
            wall_time=time.perf_counter() - t_start,
        )

    if r_norm <= opts.eps1:
        return report(StopReason.RESIDUAL)
    if grad_inf <= opts.eps2:
        return report(StopReason.GRADIENT)

    h_gn = J @ J.T
    mu = opts.tau * float(np.max(np.diag(h_gn)))
    nu = 2.0

    while iterations < opts.max_iterations:
        accepted = False
        while not accepted:
            delta = _solve_damped(h_gn, jr, mu)
            n_solves += 1
            step_norm = float(np.linalg.norm(delta))
            if step_norm <= opts.eps3 * float(np.linalg.norm(theta)):
                last_step_norm = step_norm
                return report(StopReason.STEP)
            trial = theta + delta
            if bounds is not None:
                trial = np.clip(trial, bounds[:, 0], bounds[:, 1])
            if not _theta_admissible(trial):
                trace.append(TraceEntry(trial.copy(), math.nan, mu, False))
                mu *= nu
                nu *= 2.0
                continue
            trial_params = HestonParams.from_array(trial)
            r_trial, _ = residual_vector(trial_params, chain, rule)
            n_price += 1
            r_trial_norm = float(np.linalg.norm(r_trial))
            step_eff = trial - theta
            delta_f = r_norm - r_trial_norm
            delta_l = float(step_eff @ (mu * step_eff - jr))
            if delta_f > 0.0 and delta_l > 0.0:
                accepted = True
                theta = trial
                r = r_trial
                r_norm = r_trial_norm
                last_step_norm = float(np.linalg.norm(step_eff))
                iterations += 1
                trace.append(TraceEntry(theta.copy(), r_norm, mu, True))
                if not opts.strict_paper:
                    gain = delta_f / delta_l
                    mu *= max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0) ** 3)
                    mu = max(mu, 1e-300)
                    nu = 2.0
            else:
                trace.append(TraceEntry(trial.copy(), r_trial_norm, mu, False))
                mu *= nu
                nu *= 2.0

        if r_norm <= opts.eps1:
            return report(StopReason.RESIDUAL)
        J = jacobian(HestonParams.from_array(theta), chain, rule)
        n_grad += 1
        jr = J @ r
        h_gn = J @ J.T
        grad_inf = float(np.max(np.abs(J @ ones)))
        if grad_inf <= opts.eps2:
            return report(StopReason.GRADIENT)

    return report(StopReason.MAX_ITER)
