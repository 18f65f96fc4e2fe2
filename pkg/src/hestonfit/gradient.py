"""Analytical gradient of the option price in the five model parameters.

The gradient of the characteristic function factorises as grad phi = phi * h(u)
with a five-component h sharing the hyperbolic intermediates of the price, so
one CF evaluation per node feeds all five parameter directions:

    h1 = -A
    h2 = (2 kappa / sigma^2) D - t kappa rho i u / sigma
    h3 = -v0 dA/drho + (2 kappa v_bar / (sigma^2 d)) (dd/drho - (d/A2) dA2/drho)
         - t kappa v_bar i u / sigma
    h4 = (v0 / (sigma i u)) dA/drho + (2 v_bar / sigma^2) D
         + (2 kappa v_bar / sigma^2) (dB/dkappa)/B - t v_bar rho i u / sigma
    h5 = -v0 dA/dsigma - (4 kappa v_bar / sigma^3) D
         + (2 kappa v_bar / (sigma^2 d)) (dd/dsigma - (d/A2) dA2/dsigma)
         + t kappa v_bar rho i u / sigma^2

ordered as (v0, v_bar, rho, kappa, sigma).  (dB/dkappa)/B is evaluated as
(i/(sigma u)) (dB/drho)/B + t/2 so B itself is never materialised on the hot
path; every fragment enters through scale-invariant ratios, which keeps the
long-maturity rescaling of A1/A2 transparent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .charfn import Representation, char_fn, scaled_sinh_cosh
from .errors import DomainError, EvaluationOverflowError
from .params import PARAM_NAMES, HestonParams, MarketContext
from .pricer import EVAL_COUNTS, OptionSpec, QuoteChain, price_option
from .quadrature import QuadratureRule, default_rule

#: Frequencies below this magnitude are evaluated at the guard value itself;
#: h4 carries a 1/u factor whose u -> 0 limit is finite but indeterminate in
#: floating point.  Gauss-Legendre nodes never get this small; trapezoid
#: endpoints do.
MIN_ABS_U = 1e-8


@dataclass(frozen=True)
class GradientVector:
    """dC/dtheta ordered as (v0, v_bar, rho, kappa, sigma)."""

    d_v0: float
    d_v_bar: float
    d_rho: float
    d_kappa: float
    d_sigma: float

    def to_array(self) -> np.ndarray:
        return np.array([self.d_v0, self.d_v_bar, self.d_rho, self.d_kappa, self.d_sigma])

    @classmethod
    def from_array(cls, g) -> "GradientVector":
        return cls(*(float(x) for x in g))


@dataclass(frozen=True)
class HFragments:
    """True-scale intermediate partials (diagnostic; the hot path uses ratios)."""

    dd_rho: complex
    dA2_rho: complex
    dB_rho: complex
    dA1_rho: complex
    dA_rho: complex
    dA_kappa: complex
    dB_kappa: complex
    dd_sigma: complex
    dA1_sigma: complex
    dA2_sigma: complex
    dA_sigma: complex


def _guard_u(u: np.ndarray) -> np.ndarray:
    small = np.abs(u) < MIN_ABS_U
    return np.where(small, MIN_ABS_U + 0j, u)


def _h_block(params: HestonParams, u: np.ndarray, t: float,
             sh: np.ndarray, ch: np.ndarray, with_terms: bool = False):
    """Assemble h (5, n) from shared trig values (rescaled or raw)."""
    sigma, kappa, v_bar, v0, rho = (
        params.sigma, params.kappa, params.v_bar, params.v0, params.rho,
    )
    iu = 1j * u
    u2iu = u * u + iu
    xi = kappa - sigma * rho * iu
    d = np.sqrt(xi * xi + sigma**2 * u2iu)
    a1 = u2iu * sh
    a2 = d * ch + xi * sh
    a = a1 / a2
    # fragments in rho
    dd_rho = -xi * sigma * iu / d
    dA2_rho = -sigma * iu * (2.0 + t * xi) / (2.0 * d) * (xi * ch + d * sh)
    dA1_rho = -iu * u2iu * t * xi * sigma / (2.0 * d) * ch
    dA_rho = (dA1_rho - a * dA2_rho) / a2
    dB_rho_over_B = dd_rho / d - dA2_rho / a2
    # fragments in kappa (through xi only, scaled rho-fragments)
    i_over_su = 1j / (sigma * u)
    dB_kappa_over_B = i_over_su * dB_rho_over_B + t / 2.0
    # fragments in sigma
    dd_sigma = (rho / sigma - 1.0 / xi) * dd_rho + sigma * u * u / d
    dA1_sigma = u2iu * t / 2.0 * dd_sigma * ch
    dA2_sigma = (rho / sigma * dA2_rho
                 - (2.0 + t * xi) / (iu * t * xi) * dA1_rho
                 + sigma * t * a1 / 2.0)
    dA_sigma = (dA1_sigma - a * dA2_sigma) / a2

    from .charfn import cf_terms  # D with the compensated small-sigma path
    terms = cf_terms(params, u, t)
    big_d = terms.D

    h = np.empty((5,) + u.shape, dtype=complex)
    h[0] = -a
    h[1] = 2.0 * kappa / sigma**2 * big_d - t * kappa * rho * iu / sigma
    h[2] = (-v0 * dA_rho
            + 2.0 * kappa * v_bar / (sigma**2 * d) * (dd_rho - d / a2 * dA2_rho)
            - t * kappa * v_bar * iu / sigma)
    h[3] = (v0 / (sigma * iu) * dA_rho
            + 2.0 * v_bar / sigma**2 * big_d
            + 2.0 * kappa * v_bar / sigma**2 * dB_kappa_over_B
            - t * v_bar * rho * iu / sigma)
    h[4] = (-v0 * dA_sigma
            - 4.0 * kappa * v_bar / sigma**3 * big_d
            + 2.0 * kappa * v_bar / (sigma**2 * d) * (dd_sigma - d / a2 * dA2_sigma)
            + t * kappa * v_bar * rho * iu / sigma**2)
    if not with_terms:
        return h
    frag = dict(dd_rho=dd_rho, dA2_rho=dA2_rho, dA1_rho=dA1_rho, dA_rho=dA_rho,
                dB_rho_over_B=dB_rho_over_B, dB_kappa_over_B=dB_kappa_over_B,
                dd_sigma=dd_sigma, dA1_sigma=dA1_sigma, dA2_sigma=dA2_sigma,
                dA_sigma=dA_sigma, a=a, a1=a1, a2=a2, d=d, xi=xi, D=big_d)
    return h, frag


def h_vector(params: HestonParams, u, t: float) -> np.ndarray:
    """The five log-derivative factors h(u), shaped (5,) or (5, n).

    grad phi = phi * h componentwise in the (v0, v_bar, rho, kappa, sigma)
    ordering; u may be complex (the pricing integrals evaluate at u - i).
    """
    if not t > 0.0:
        raise DomainError("maturity must be positive")
    scalar = np.isscalar(u) or (isinstance(u, np.ndarray) and u.ndim == 0)
    uu = _guard_u(np.atleast_1d(np.asarray(u, dtype=complex)))
    iu = 1j * uu
    u2iu = uu * uu + iu
    xi = params.kappa - params.sigma * params.rho * iu
    d = np.sqrt(xi * xi + params.sigma**2 * u2iu)
    sh, ch, _ = scaled_sinh_cosh(d, t)
    h = _h_block(params, uu, t, sh, ch)
    if not np.all(np.isfinite(h)):
        raise EvaluationOverflowError("h-vector evaluation overflowed")
    return h[:, 0] if scalar else h


def h_fragments(params: HestonParams, u, t: float) -> HFragments:
    """True-scale fragments at a scalar frequency, for derivative checks.

    Evaluated with raw hyperbolics (no rescaling) so each field matches a
    finite-difference derivative of the corresponding raw term; overflows for
    t*Re(d) beyond the representable range raise instead of rescaling.
    """
    if not t > 0.0:
        raise DomainError("maturity must be positive")
    uu = _guard_u(np.atleast_1d(np.asarray(u, dtype=complex)))
    iu = 1j * uu
    u2iu = uu * uu + iu
    xi = params.kappa - params.sigma * params.rho * iu
    d = np.sqrt(xi * xi + params.sigma**2 * u2iu)
    with np.errstate(over="ignore", invalid="ignore"):
        half = 0.5 * d * t
        sh = np.sinh(half)
        ch = np.cosh(half)
        _, frag = _h_block(params, uu, t, sh, ch, with_terms=True)
    b = np.exp(frag["D"])
    values = (frag["dd_rho"], frag["dA2_rho"], frag["dB_rho_over_B"] * b,
              frag["dA1_rho"], frag["dA_rho"],
              1j / (params.sigma * uu) * frag["dA_rho"],
              frag["dB_kappa_over_B"] * b,
              frag["dd_sigma"], frag["dA1_sigma"], frag["dA2_sigma"],
              frag["dA_sigma"])
    if not all(np.all(np.isfinite(v)) for v in values):
        raise EvaluationOverflowError("fragment evaluation overflowed")
    return HFragments(*(complex(v[0]) for v in values))


def price_gradient(params: HestonParams, market: MarketContext, opt: OptionSpec,
                   rule: QuadratureRule | None = None) -> GradientVector:
    """Gradient of the option present value via vectorised quadrature.

    phi and h are evaluated once per node and shared across the five
    components; the first integral evaluates both at the shifted argument
    u - i.  Parity makes the gradient identical for calls and puts.
    """
    rule = rule or default_rule()
    u = rule.nodes
    t = opt.maturity
    k = opt.strike
    phase_w = rule.weights * np.exp(-1j * u * math.log(k)) / (1j * u)
    blocks = []
    for z in (u - 1j, u + 0j):
        phi = char_fn(Representation.CUI, params, market, z, t)
        h = h_vector(params, z, t)
        blocks.append(np.real((h * phi) @ phase_w))
        EVAL_COUNTS.integral_evals += 1
    df = market.discount(t)
    g = (df / math.pi) * (blocks[0] - k * blocks[1])
    return GradientVector.from_array(g)


def fd_gradient(params: HestonParams, market: MarketContext, opt: OptionSpec,
                rule: QuadratureRule | None = None,
                epsilon: float = 1e-4) -> GradientVector:
    """Central-difference reference gradient with one increment for all five.

    Each component requires two full price evaluations; the perturbed
    parameter must stay inside the valid domain or a DomainError is raised.
    """
    if not epsilon > 0.0:
        raise DomainError("epsilon must be positive")
    rule = rule or default_rule()
    theta = params.to_array()
    g = np.empty(5)
    for j in range(5):
        up, down = theta.copy(), theta.copy()
        up[j] += epsilon
        down[j] -= epsilon
        try:
            p_up = HestonParams.from_array(up)
            p_down = HestonParams.from_array(down)
        except DomainError as exc:
            raise DomainError(
                f"finite-difference bump leaves the domain for {PARAM_NAMES[j]}: {exc}"
            ) from exc
        g[j] = (price_option(p_up, market, opt, rule)
                - price_option(p_down, market, opt, rule)) / (2.0 * epsilon)
    return GradientVector.from_array(g)


def jacobian(params: HestonParams, chain: QuoteChain,
             rule: QuadratureRule | None = None) -> np.ndarray:
    """Residual Jacobian (5 x n): column i is the price gradient of quote i.

    Market prices are constants, so residual and price derivatives coincide;
    CF and h evaluations are shared across strikes of the same maturity.
    """
    rule = rule or default_rule()
    u = rule.nodes
    specs = chain.specs()
    maturities = np.array([s.maturity for s in specs])
    out = np.empty((5, len(specs)))
    for t in np.unique(maturities):
        idx = np.flatnonzero(maturities == t)
        strikes = np.array([specs[i].strike for i in idx])
        phase_w = (np.exp(-1j * np.outer(np.log(strikes), u)) / (1j * u)) * rule.weights
        grads = []
        for z in (u - 1j, u + 0j):
            phi = char_fn(Representation.CUI, params, chain.market, z, float(t))
            h = h_vector(params, z, float(t))
            grads.append(np.real(phase_w @ (h * phi).T))  # (m, 5)
            EVAL_COUNTS.integral_evals += len(idx)
        df = chain.market.discount(float(t))
        cols = (df / math.pi) * (grads[0] - strikes[:, None] * grads[1])
        out[:, idx] = cols.T
    return out


def integrand_profile(params: HestonParams, market: MarketContext,
                      opt: OptionSpec, u) -> np.ndarray:
    """Magnitudes of the six integrand families at real frequencies u.

    Row 0 is the price integrand, rows 1-5 the gradient integrands; each row
    takes the maximum magnitude over the shifted (u - i) and unshifted
    flavours so a bound on the profile bounds every integral actually
    evaluated.  Shaped (6, n).
    """
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(uu <= 0.0):
        raise DomainError("profile frequencies must be positive")
    t = opt.maturity
    phase = np.exp(-1j * uu * math.log(opt.strike)) / (1j * uu)
    prof = np.zeros((6, uu.size))
    for z in (uu - 1j, uu + 0j):
        phi = char_fn(Representation.CUI, params, market, z, t)
        h = h_vector(params, z, t)
        prof[0] = np.maximum(prof[0], np.abs(np.real(phase * phi)))
        prof[1:] = np.maximum(prof[1:], np.abs(np.real(phase * phi * h)))
    return prof


def signed_integrands(params: HestonParams, market: MarketContext,
                      opt: OptionSpec, u) -> np.ndarray:
    """Signed unshifted integrand values (price + 5 gradient rows), (6, n)."""
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(uu <= 0.0):
        raise DomainError("frequencies must be positive")
    t = opt.maturity
    phase = np.exp(-1j * uu * math.log(opt.strike)) / (1j * uu)
    phi = char_fn(Representation.CUI, params, market, uu + 0j, t)
    h = h_vector(params, uu + 0j, t)
    out = np.empty((6, uu.size))
    out[0] = np.real(phase * phi)
    out[1:] = np.real(phase * phi * h)
    return out
