import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import hestonfit as hf
from hestonfit import Representation
from hestonfit.charfn import log1p_c, scaled_sinh_cosh

from conftest import REF_MARKET, REF_PARAMS

ALL_REPS = list(Representation)


def params_strategy():
    return st.builds(
        hf.HestonParams,
        v0=st.floats(0.05, 0.95),
        v_bar=st.floats(0.05, 0.95),
        rho=st.floats(-0.9, -0.1),
        kappa=st.floats(0.5, 5.0),
        sigma=st.floats(0.05, 0.95),
    )


class TestTerms:
    def test_zero_frequency_kills_a1(self):
        terms = hf.cf_terms(REF_PARAMS, 0.0, 1.0)
        assert terms.xi == 3.0 + 0j
        assert terms.A1 == 0j
        assert terms.A == 0j

    def test_d_equals_xi_at_zero_frequency(self):
        for params in (REF_PARAMS, hf.HestonParams(0.3, 0.2, 0.5, 1.7, 0.9)):
            terms = hf.cf_terms(params, 0.0, 2.5)
            assert terms.d == pytest.approx(terms.xi, rel=1e-15)

    @pytest.mark.parametrize("t", [0.1, 1.0, 15.0, 40.0])
    def test_reconstruction_invariants(self, t):
        u = np.linspace(0.05, 150.0, 400)
        terms = hf.cf_terms(REF_PARAMS, u, t)
        lhs = terms.d ** 2
        rhs = terms.xi ** 2 + REF_PARAMS.sigma ** 2 * (u * u + 1j * u)
        assert np.max(np.abs(lhs - rhs) / np.abs(rhs)) < 1e-12
        mask = np.abs(terms.A2) > 1e-300
        recon = np.abs(terms.A * terms.A2 - terms.A1)[mask]
        scale = np.maximum(np.abs(terms.A1[mask]), 1e-300)
        assert np.max(recon / scale) < 1e-10

    def test_cross_check_against_raw_hyperbolic_forms(self):
        # moderate maturity-frequency product: raw sinh/cosh representable
        u, t = 5.0, 15.0
        terms = hf.cf_terms(REF_PARAMS, u, t)
        xi, d = terms.xi, terms.d
        a2_raw = d * np.cosh(d * t / 2) + xi * np.sinh(d * t / 2)
        assert terms.A2 == pytest.approx(a2_raw, rel=1e-12)
        a1_raw = (u * u + 1j * u) * np.sinh(d * t / 2)
        assert terms.A1 == pytest.approx(a1_raw, rel=1e-12)
        # beyond the first branch crossing the raw principal log differs by a
        # whole phase turn; the continuous value matches it modulo 2 pi
        log_b_raw = np.log(d) + REF_PARAMS.kappa * t / 2 - np.log(a2_raw)
        turns = np.round((terms.D.imag - log_b_raw.imag) / (2 * np.pi))
        assert terms.D == pytest.approx(log_b_raw + 2j * np.pi * turns, rel=1e-10)

    @pytest.mark.parametrize("u,t", [(1.5, 15.0), (5.0, 1.0)])
    def test_continuous_log_equals_raw_log_before_first_wrap(self, u, t):
        terms = hf.cf_terms(REF_PARAMS, u, t)
        a2_raw = (terms.d * np.cosh(terms.d * t / 2)
                  + terms.xi * np.sinh(terms.d * t / 2))
        log_b_raw = np.log(terms.d) + REF_PARAMS.kappa * t / 2 - np.log(a2_raw)
        assert terms.D == pytest.approx(log_b_raw, rel=1e-10)

    def test_rescaled_lanes_keep_ratio(self):
        # t*Re(d) > threshold: A1, A2 carry a common factor, A is unchanged
        u = np.linspace(40.0, 200.0, 50)
        t = 15.0
        terms = hf.cf_terms(REF_PARAMS, u, t)
        _, _, mask = scaled_sinh_cosh(terms.d, t)
        assert np.all(mask)
        assert np.all(np.isfinite(terms.A))
        assert np.all(np.abs(terms.A2) < 1e200)

    def test_maturity_validation(self):
        with pytest.raises(hf.DomainError):
            hf.cf_terms(REF_PARAMS, 1.0, 0.0)
        with pytest.raises(hf.DomainError):
            hf.cf_terms(REF_PARAMS, 1.0, -1.0)


class TestParams:
    @pytest.mark.parametrize("field,value", [
        ("v0", -0.1), ("v0", 0.0), ("v_bar", -1.0), ("sigma", 0.0),
        ("kappa", -3.0), ("rho", -1.0), ("rho", 1.0), ("rho", 1.5),
    ])
    def test_invalid_parameters_rejected(self, field, value):
        base = dict(v0=0.08, v_bar=0.1, rho=-0.8, kappa=3.0, sigma=0.25)
        base[field] = value
        with pytest.raises(hf.DomainError):
            hf.HestonParams(**base)

    def test_array_roundtrip_ordering(self):
        theta = REF_PARAMS.to_array()
        assert list(theta) == [0.08, 0.1, -0.8, 3.0, 0.25]
        assert hf.HestonParams.from_array(theta) == REF_PARAMS


class TestCharFn:
    @pytest.mark.parametrize("rep", ALL_REPS)
    def test_normalisation(self, rep):
        for seed in range(10):
            params = hf.draw_random_params((100, seed))
            phi = hf.char_fn(rep, params, REF_MARKET, 0.0, 1.3)
            assert abs(phi - 1.0) < 1e-12

    def test_martingale_identity(self):
        for seed in range(50):
            params = hf.draw_random_params((101, seed))
            for t in (0.1, 1.0, 5.0, 15.0):
                f = REF_MARKET.forward(t)
                phi = hf.char_fn(Representation.CUI, params, REF_MARKET, -1j, t)
                assert abs(phi - f) / f < 1e-10

    def test_martingale_reference_value(self):
        phi = hf.char_fn(Representation.CUI, REF_PARAMS, REF_MARKET, -1j, 1.0)
        assert phi.real == pytest.approx(1.0202013400267558, abs=1e-12)
        assert abs(phi.imag) < 1e-14

    @pytest.mark.parametrize("rep", ALL_REPS)
    def test_conjugate_symmetry(self, rep):
        u = np.array([0.3, 1.7, 8.0, 42.0])
        a = hf.char_fn(rep, REF_PARAMS, REF_MARKET, u, 1.0)
        b = hf.char_fn(rep, REF_PARAMS, REF_MARKET, -u, 1.0)
        assert np.max(np.abs(np.conj(a) - b)) < 1e-12

    def test_cui_schoutens_agreement_randomized(self):
        u = np.concatenate([[1e-4], np.linspace(0.05, 200.0, 600)])
        for seed in range(100):
            params = hf.draw_random_params((102, seed))
            for t in (0.5, 5.0, 15.0):
                a = hf.char_fn(Representation.CUI, params, REF_MARKET, u, t)
                b = hf.char_fn(Representation.SCHOUTENS, params, REF_MARKET, u, t)
                denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
                err = np.abs(a - b) / denom
                # both representations underflow identically far out in u
                err[(np.abs(a) == 0.0) & (np.abs(b) == 0.0)] = 0.0
                assert np.max(err) < 1e-10

    def test_legacy_forms_jump_and_continuous_forms_do_not(self):
        u = np.arange(1e-3, 10.0, 1e-3)
        t = 15.0
        vals = {rep: hf.char_fn(rep, REF_PARAMS, REF_MARKET, u, t)
                for rep in ALL_REPS}
        jumps_h = hf.find_discontinuities(u, vals[Representation.HESTON])
        jumps_d = hf.find_discontinuities(u, vals[Representation.DELBANO])
        assert jumps_h.size and abs(jumps_h[0] - 1.0) < 0.25
        assert jumps_d.size and abs(jumps_d[0] - 2.0) < 0.25
        assert hf.find_discontinuities(u, vals[Representation.CUI]).size == 0
        assert hf.find_discontinuities(u, vals[Representation.SCHOUTENS]).size == 0

    def test_cui_stays_finite_at_extreme_maturity(self):
        u = np.linspace(0.1, 200.0, 300)
        phi = hf.char_fn(Representation.CUI, REF_PARAMS, REF_MARKET, u, 40.0)
        assert np.all(np.isfinite(phi))

    def test_legacy_overflow_signalled(self):
        with pytest.raises(hf.EvaluationOverflowError):
            hf.char_fn(Representation.HESTON, REF_PARAMS, REF_MARKET,
                       np.array([200.0]), 40.0)

    @given(params=params_strategy(), u=st.floats(0.01, 150.0),
           t=st.sampled_from([0.25, 1.0, 5.0]))
    @settings(max_examples=60, deadline=None)
    def test_modulus_bounded_by_one(self, params, u, t):
        phi = hf.char_fn(Representation.CUI, params, REF_MARKET, u, t)
        assert abs(phi) <= 1.0 + 1e-12


class TestHighPrecisionOracle:
    @staticmethod
    def _mp_cf(params, spot, rate, u, t):
        """50-digit evaluation of the continuous exponent form."""
        mp.mp.dps = 50
        kappa = mp.mpf(repr(params.kappa))
        v_bar = mp.mpf(repr(params.v_bar))
        sigma = mp.mpf(repr(params.sigma))
        rho = mp.mpf(repr(params.rho))
        v0 = mp.mpf(repr(params.v0))
        u = mp.mpc(u)
        iu = mp.mpc(0, 1) * u
        xi = kappa - sigma * rho * iu
        d = mp.sqrt(xi * xi + sigma ** 2 * (u * u + iu))
        g = (d + xi) / 2 + (d - xi) / 2 * mp.e ** (-d * t)
        big_d = mp.log(d) + (kappa - d) * t / 2 - mp.log(g)
        a1 = (u * u + iu) * mp.sinh(d * t / 2)
        a2 = d * mp.cosh(d * t / 2) + xi * mp.sinh(d * t / 2)
        a = a1 / a2
        lead = iu * (mp.log(mp.mpf(repr(spot))) + mp.mpf(repr(rate)) * t)
        return complex(mp.e ** (lead - t * kappa * v_bar * rho * iu / sigma
                                - v0 * a + 2 * kappa * v_bar / sigma ** 2 * big_d))

    @pytest.mark.parametrize("u,t,tol", [
        (1.0, 1.0, 1e-13), (5.0, 15.0, 1e-13), (0.5, 40.0, 1e-13),
        (3.0 - 1j, 1.0, 1e-13),
        (60.0, 15.0, 1e-12),  # modulus near 1e-229
    ])
    def test_reference_process(self, u, t, tol):
        got = hf.char_fn(Representation.CUI, REF_PARAMS, REF_MARKET, u, t)
        ref = self._mp_cf(REF_PARAMS, 1.0, 0.02, u, t)
        assert abs(got - ref) / abs(ref) < tol

    @pytest.mark.parametrize("u", [2.0, 10.0, 5.0 - 1j])
    def test_vanishing_vol_of_vol(self, u):
        # exponent coefficients of order sigma^{-2} amplify any error in the
        # continuous log; the compensated path holds ~1e-11 where plain
        # double-precision evaluation loses five digits
        params = hf.HestonParams(v0=0.04, v_bar=0.04, rho=-0.5, kappa=1.0,
                                 sigma=1e-6)
        got = hf.char_fn(Representation.CUI, params, REF_MARKET, u, 1.0)
        ref = self._mp_cf(params, 1.0, 0.02, u, 1.0)
        assert abs(got - ref) / abs(ref) < 1e-9


class TestSigmaDegeneration:
    def test_cf_approaches_lognormal_as_vol_of_vol_vanishes(self):
        params = hf.HestonParams(v0=0.04, v_bar=0.04, rho=-0.5, kappa=1.0,
                                 sigma=1e-6)
        u = np.linspace(0.05, 10.0, 100)
        t = 1.0
        phi = hf.char_fn(Representation.CUI, params, REF_MARKET, u, t)
        s2 = 0.04
        ref = np.exp(1j * u * (np.log(REF_MARKET.spot) + (REF_MARKET.rate - 0.5 * s2) * t)
                     - 0.5 * u * u * s2 * t)
        assert np.max(np.abs(phi - ref) / np.abs(ref)) < 1e-5


class TestSpiral:
    def test_gamma_crosses_negative_axis_repeatedly(self):
        u = np.arange(0.01, 500.0, 0.01)
        diag = hf.spiral_diagnostic(REF_PARAMS, 15.0, u)
        crossings = np.sum((diag.gamma.imag[:-1] * diag.gamma.imag[1:] < 0)
                           & (diag.gamma.real[:-1] < 0))
        assert crossings >= 3

    def test_continuous_log_has_no_phase_jump(self):
        u = np.arange(0.01, 4.0, 0.01)
        diag = hf.spiral_diagnostic(REF_PARAMS, 15.0, u)
        assert np.max(np.abs(np.diff(diag.log_a2_continuous.imag))) < np.pi
        # the raw principal log wraps by 2 pi somewhere on the same grid
        assert np.max(np.abs(np.diff(diag.log_a2_direct.imag))) > np.pi

    def test_degenerate_maturity_forms_agree(self):
        u = np.arange(0.01, 10.0, 0.01)
        diag = hf.spiral_diagnostic(REF_PARAMS, 1e-6, u)
        assert np.max(np.abs(diag.log_a2_direct - diag.log_a2_continuous)) < 1e-10
        crossings = np.sum((diag.gamma.imag[:-1] * diag.gamma.imag[1:] < 0)
                           & (diag.gamma.real[:-1] < 0))
        assert crossings == 0

    def test_grid_validation(self):
        with pytest.raises(hf.DomainError):
            hf.spiral_diagnostic(REF_PARAMS, 15.0, np.array([1.0, 0.5]))
        with pytest.raises(hf.DomainError):
            hf.spiral_diagnostic(REF_PARAMS, 15.0, np.array([-1.0, 1.0]))

    def test_small_modulus_rejected(self):
        # |A2| ~ kappa e^{kappa t/2} near u = 0; small kappa and t drop it below e
        params = hf.HestonParams(v0=0.04, v_bar=0.04, rho=-0.5, kappa=1.1,
                                 sigma=0.2)
        with pytest.raises(hf.DomainError):
            hf.spiral_diagnostic(params, 0.05, np.array([0.01, 0.02]))


class TestLog1p:
    @pytest.mark.parametrize("z", [
        1e-12 + 1e-13j, -2.5e-11 + 4e-11j, 1e-6 - 1e-6j, 0.3 - 0.2j,
        1e-17 - 3e-18j,
    ])
    def test_matches_high_precision(self, z):
        mp.mp.dps = 40
        got = complex(log1p_c(np.array([z]))[0])
        ref = complex(mp.log(mp.mpc(1 + mp.mpf(z.real), mp.mpf(z.imag))))
        assert abs(got - ref) <= 1e-15 * abs(ref)

    def test_zero(self):
        assert log1p_c(np.array([0j]))[0] == 0j
