"""Heston characteristic function in four algebraically equivalent representations.

The hyperbolic-form intermediates (xi, d, A1, A2, A, D) are shared between the
pricer and the analytical gradient.  The default CUI representation evaluates
the log of the B factor through

    D = log d + (kappa - d) t/2 - log((d + xi)/2 + ((d - xi)/2) e^{-d t}),

whose log arguments stay clear of the negative real axis for real frequencies,
so the value is continuous in u where the textbook forms branch-switch at
moderate-to-long maturities.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import DomainError, EvaluationOverflowError
from .params import HestonParams, MarketContext

#: Above this value of t*Re(d), sinh/cosh of d*t/2 are evaluated in rescaled
#: form (common factor exp(-Re(d) t/2) removed).  Raw hyperbolics overflow
#: near t*Re(d) ~ 1400; the margin keeps every intermediate far from the edge.
RESCALE_THRESHOLD = 50.0


class Representation(Enum):
    """The four published functional forms of the characteristic function."""

    HESTON = "heston"
    SCHOUTENS = "schoutens"
    DELBANO = "delbano"
    CUI = "cui"


@dataclass(frozen=True)
class CharFnTerms:
    """Intermediate complex quantities shared by price and gradient.

    For t*Re(d) > RESCALE_THRESHOLD the A1 and A2 fields carry a common
    rescaling factor exp(-Re(d) t/2); their ratio A and every downstream
    formula consuming A1/A2 only through ratios are unaffected.
    """

    xi: np.ndarray | complex
    d: np.ndarray | complex
    A1: np.ndarray | complex
    A2: np.ndarray | complex
    A: np.ndarray | complex
    D: np.ndarray | complex


class SpiralDiagnostic(NamedTuple):
    gamma: np.ndarray
    log_a2_direct: np.ndarray
    log_a2_continuous: np.ndarray


def _check_maturity(t: float) -> None:
    if not t > 0.0:
        raise DomainError(f"maturity t={t!r} must be positive")


def _as_complex(u) -> tuple[np.ndarray, bool]:
    scalar = np.isscalar(u) or (isinstance(u, np.ndarray) and u.ndim == 0)
    return np.atleast_1d(np.asarray(u, dtype=complex)), scalar


def log1p_c(z: np.ndarray) -> np.ndarray:
    """Complex log(1+z), accurate for tiny |z|.

    numpy's complex log1p loses relative accuracy below |z| ~ 1e-8; the
    compensated product form keeps it at machine precision.
    """
    z = np.asarray(z, dtype=complex)
    w = 1.0 + z
    wm1 = w - 1.0
    exact = wm1 == 0.0
    w_safe = np.where(exact, 1.0, w)
    wm1_safe = np.where(exact, 1.0, wm1)
    return np.where(exact, z, np.log(w_safe) * (z / wm1_safe))


def scaled_sinh_cosh(d: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """sinh(d t/2) and cosh(d t/2), rescaled by exp(-Re(d) t/2) where needed.

    Returns (sinh_like, cosh_like, rescaled_mask).  The mask marks entries
    where t*Re(d) > RESCALE_THRESHOLD; on those lanes both outputs carry the
    common damping factor, which cancels in every ratio the callers form.
    """
    half = 0.5 * t * np.asarray(d, dtype=complex)
    mask = half.real > 0.5 * RESCALE_THRESHOLD
    half_safe = np.where(mask, 0.0, half)
    sh = np.sinh(half_safe)
    ch = np.cosh(half_safe)
    if np.any(mask):
        # exp(-Re(d)t/2) * sinh(dt/2) = (p - q)/2 with p = exp(i Im(d) t/2)
        # and q = exp(-Re(d) t - i Im(d) t/2); likewise (p + q)/2 for cosh.
        p = np.exp(1j * half.imag)
        q = np.exp(-2.0 * half.real - 1j * half.imag)
        sh = np.where(mask, 0.5 * (p - q), sh)
        ch = np.where(mask, 0.5 * (p + q), ch)
    return sh, ch, mask


def _xi_d(params: HestonParams, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    iu = 1j * u
    u2iu = u * u + iu
    xi = params.kappa - params.sigma * params.rho * iu
    d = np.sqrt(xi * xi + params.sigma**2 * u2iu)
    return xi, d, u2iu


def cf_terms(params: HestonParams, u, t: float) -> CharFnTerms:
    """Evaluate the shared intermediates at (complex) frequency u and maturity t.

    xi = kappa - sigma rho i u, d the principal square root of
    xi^2 + sigma^2 (u^2 + iu), A1 = (u^2 + iu) sinh(d t/2),
    A2 = d cosh(d t/2) + xi sinh(d t/2), A = A1/A2 and D the continuous
    evaluation of log B = log d + (kappa - d) t/2 - log A2 e^{d t/2}.
    """
    _check_maturity(t)
    uu, scalar = _as_complex(u)
    iu = 1j * uu
    u2iu = uu * uu + iu
    xi = params.kappa - params.sigma * params.rho * iu
    d = np.sqrt(xi * xi + params.sigma**2 * u2iu)
    sh, ch, _ = scaled_sinh_cosh(d, t)
    a1 = u2iu * sh
    a2 = d * ch + xi * sh
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(u2iu == 0.0, 0.0, a1 / np.where(a2 == 0.0, 1.0, a2))
        a = np.where((a2 == 0.0) & (u2iu != 0.0), np.nan + 0j, a)
    dd = _log_b(params, uu, iu, u2iu, xi, d, t)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(dd))):
        raise EvaluationOverflowError(
            "characteristic-function terms overflowed; input frequency or "
            "maturity outside the representable range"
        )
    if scalar:
        return CharFnTerms(
            xi=complex(xi[0]), d=complex(d[0]), A1=complex(a1[0]),
            A2=complex(a2[0]), A=complex(a[0]), D=complex(dd[0]),
        )
    return CharFnTerms(xi=xi, d=d, A1=a1, A2=a2, A=a, D=dd)


def _log_b(params: HestonParams, u, iu, u2iu, xi, d, t: float) -> np.ndarray:
    """Continuous log B.

    Generic path: log d + (kappa - d) t/2 - log G with
    G = (d + xi)/2 + ((d - xi)/2) e^{-d t}; both log arguments stay in the
    right half plane for real u, so principal logs give a continuous value.

    Near the deterministic-variance degeneracy (vol-of-vol -> 0) the result is
    multiplied downstream by coefficients of order sigma^{-2}, so the log
    difference is formed in compensated shape: d - xi and kappa - d are
    replaced by cancellation-free rational expressions and log d - log G
    collapses to log1p of an exactly computed small ratio.
    """
    sigma = params.sigma
    kappa = params.kappa
    emdt = np.exp(-d * t)
    dpx = d + xi
    dmx_direct = d - xi
    # d - xi = sigma^2 (u^2 + iu) / (d + xi): exact when the sum dominates.
    with np.errstate(invalid="ignore", divide="ignore"):
        dmx_ratio = sigma**2 * u2iu / np.where(dpx == 0.0, 1.0, dpx)
    use_ratio = np.abs(dpx) >= np.abs(dmx_direct)
    dmx = np.where(use_ratio & (dpx != 0.0), dmx_ratio, dmx_direct)
    g = 0.5 * dpx + 0.5 * dmx * emdt
    # kappa - d = sigma (rho i u (kappa + xi) - sigma (u^2+iu)) / (kappa + d);
    # Re(kappa + d) > 0, so this form never cancels.
    kmd = sigma * (params.rho * iu * (kappa + xi) - sigma * u2iu) / (kappa + d)
    # Small-ratio branch: d - G = (dmx/2)(1 - e^{-dt}) exactly.
    with np.errstate(invalid="ignore", divide="ignore"):
        z = 0.5 * dmx * (-np.expm1(-d * t)) / np.where(g == 0.0, 1.0, g)
        near_one = np.abs(z) < 1e-4
        lg = np.log(np.where(g == 0.0, 1.0, g))
        ld = np.log(np.where(d == 0.0, 1.0, d))
    generic = ld + kmd * (t / 2.0) - lg
    compensated = kmd * (t / 2.0) + log1p_c(np.where(near_one, z, 0.0))
    return np.where(near_one, compensated, generic)


def char_fn(rep: Representation, params: HestonParams, market: MarketContext,
            u, t: float):
    """Characteristic function of log S_T at (complex) frequency u.

    All four representations agree algebraically; CUI (the default throughout
    the package) is additionally continuous in u, HESTON and DELBANO exhibit
    branch-switch jumps at long maturities and exist for comparison only.
    """
    _check_maturity(t)
    uu, scalar = _as_complex(u)
    iu = 1j * uu
    lead = iu * (np.log(market.spot) + market.rate * t)
    sigma, kappa, v_bar, v0, rho = (
        params.sigma, params.kappa, params.v_bar, params.v0, params.rho,
    )

    if rep is Representation.CUI:
        terms = cf_terms(params, uu, t)
        exponent = (lead - t * kappa * v_bar * rho * iu / sigma
                    - v0 * terms.A + (2.0 * kappa * v_bar / sigma**2) * terms.D)
        phi = np.exp(exponent)
    elif rep is Representation.SCHOUTENS:
        xi, d, u2iu = _xi_d(params, uu)
        emdt = np.exp(-d * t)
        g2 = (xi - d) / (xi + d)
        num = 1.0 - g2 * emdt
        den = 1.0 - g2
        exponent = (lead
                    + kappa * v_bar / sigma**2
                    * ((xi - d) * t - 2.0 * (np.log(num) - np.log(den)))
                    + v0 / sigma**2 * (xi - d) * (1.0 - emdt) / num)
        phi = np.exp(exponent)
    elif rep is Representation.HESTON:
        xi, d, u2iu = _xi_d(params, uu)
        with np.errstate(over="ignore", invalid="ignore"):
            edt = np.exp(d * t)
            # (1 - g1 e^{dt})/(1 - g1) with g1 = (xi+d)/(xi-d), multiplied
            # through by (xi - d) so the u = 0 point (d = xi) stays regular.
            num = (xi - d) - (xi + d) * edt
            exponent = (lead
                        + kappa * v_bar / sigma**2
                        * ((xi + d) * t - 2.0 * np.log(num / (-2.0 * d)))
                        + v0 / sigma**2 * (xi + d) * (xi - d) * (1.0 - edt) / num)
            phi = np.exp(exponent)
    elif rep is Representation.DELBANO:
        xi, d, u2iu = _xi_d(params, uu)
        with np.errstate(over="ignore", invalid="ignore"):
            half = 0.5 * d * t
            sh = np.sinh(half)
            ch = np.cosh(half)
            a2 = d * ch + xi * sh
            a = np.where(u2iu == 0.0, 0.0, u2iu * sh / a2)
            b = d * np.exp(kappa * t / 2.0) / a2
            phi = (np.exp(lead - t * kappa * v_bar * rho * iu / sigma - v0 * a)
                   * b ** (2.0 * kappa * v_bar / sigma**2))
    else:  # pragma: no cover - exhaustive enum
        raise DomainError(f"unknown representation {rep!r}")

    if not np.all(np.isfinite(phi)):
        bad = uu[~np.isfinite(phi)]
        raise EvaluationOverflowError(
            f"{rep.value} characteristic function overflowed at u={bad[0]!r} "
            f"({bad.size} of {uu.size} nodes non-finite)"
        )
    return complex(phi[0]) if scalar else phi


def spiral_diagnostic(params: HestonParams, t: float, u_grid) -> SpiralDiagnostic:
    """Trajectory data for the outward spiral of A2 and its two log forms.

    gamma(u) = A2 log log|A2| / |A2| compresses the exploding radius so the
    repeated crossings of the negative real axis are visible; log_a2_direct is
    the principal log of the raw product, log_a2_continuous the rearranged
    d t/2 + log((d+xi)/2 + ((d-xi)/2) e^{-dt}) which does not jump.
    """
    _check_maturity(t)
    u = np.asarray(u_grid, dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise DomainError("u_grid must be a non-empty 1-d sequence")
    if np.any(np.diff(u) <= 0.0) or u[0] <= 0.0:
        raise DomainError("u_grid must be strictly increasing and positive")
    xi, d, _ = _xi_d(params, u.astype(complex))
    half = 0.5 * d * t
    with np.errstate(over="ignore", invalid="ignore"):
        a2 = d * np.cosh(half) + xi * np.sinh(half)
    if not np.all(np.isfinite(a2)):
        raise EvaluationOverflowError("A2 overflowed on the diagnostic grid")
    abs_a2 = np.abs(a2)
    if np.any(abs_a2 <= np.e):
        raise DomainError("|A2| <= e on the grid; double log undefined")
    gamma = a2 * np.log(np.log(abs_a2)) / abs_a2
    log_direct = np.log(a2)
    log_cont = half + np.log(0.5 * (d + xi) + 0.5 * (d - xi) * np.exp(-d * t))
    return SpiralDiagnostic(gamma, log_direct, log_cont)


def find_discontinuities(u_grid, values, factor: float = 10.0,
                         window: int = 25) -> np.ndarray:
    """Grid abscissae where |step| exceeds factor x the local secant scale.

    The local scale at each step is the median |step| over a neighbouring
    window, floored at 1e-10 of the overall value scale so that flat tails do
    not trigger on roundoff.  Returns the u midpoints of offending steps.
    """
    from scipy.signal import medfilt

    u = np.asarray(u_grid, dtype=float)
    v = np.real(np.asarray(values))
    steps = np.abs(np.diff(v))
    if window % 2 == 0:
        window += 1
    local = medfilt(steps, min(window, 2 * (steps.size // 2) - 1 if steps.size >= 3 else 1))
    floor = 1e-10 * max(1.0, float(np.max(np.abs(v))))
    jumps = steps > factor * np.maximum(local, floor)
    return 0.5 * (u[:-1] + u[1:])[jumps]
