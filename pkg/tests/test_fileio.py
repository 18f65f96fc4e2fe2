import io

import pytest

import hestonfit as hf
from hestonfit import fileio
from hestonfit.pricer import OptionType

from conftest import REF_MARKET, REF_PARAMS


class TestParamsFile:
    def test_roundtrip_bit_faithful(self, tmp_path):
        path = tmp_path / "params.txt"
        fileio.write_params_file(path, REF_PARAMS, REF_MARKET)
        params, market = fileio.read_params_file(path)
        assert params == REF_PARAMS
        assert market == REF_MARKET

    def test_market_optional(self, tmp_path):
        path = tmp_path / "p.txt"
        fileio.write_params_file(path, REF_PARAMS)
        params, market = fileio.read_params_file(path)
        assert params == REF_PARAMS
        assert market is None

    def test_comments_and_blank_lines_ignored(self):
        text = "# a comment\n\nkappa = 3\nv_bar = 0.1\nsigma=0.25\nrho =-0.8\nv0 = 0.08\n"
        params, _ = fileio.read_params(io.StringIO(text))
        assert params == REF_PARAMS

    def test_missing_keys_rejected(self):
        with pytest.raises(hf.FileFormatError):
            fileio.read_params(io.StringIO("kappa = 3\n"))

    def test_bad_number_rejected(self):
        with pytest.raises(hf.FileFormatError):
            fileio.read_params(io.StringIO("kappa = three\n"))

    def test_bad_syntax_rejected(self):
        with pytest.raises(hf.FileFormatError):
            fileio.read_params(io.StringIO("kappa: 3\n"))


class TestChainFile:
    def test_strike_price_roundtrip_lossless(self, tmp_path, ref_chain):
        path = tmp_path / "chain.csv"
        fileio.write_chain_file(path, ref_chain, quote_kind="price")
        back = fileio.read_chain_file(path)
        assert back.market == ref_chain.market
        for a, b in zip(back.quotes, ref_chain.quotes):
            assert a.spec.strike == b.spec.strike
            assert a.spec.option_type is b.spec.option_type
            assert a.price == b.price

    def test_write_read_write_fixed_point(self, tmp_path, ref_chain):
        p1 = tmp_path / "c1.csv"
        p2 = tmp_path / "c2.csv"
        fileio.write_chain_file(p1, ref_chain, quote_kind="price")
        fileio.write_chain_file(p2, fileio.read_chain_file(p1), quote_kind="price")
        assert p1.read_text() == p2.read_text()

    def test_vol_quoted_roundtrip_reprices(self, tmp_path, ref_chain):
        path = tmp_path / "chain.csv"
        fileio.write_chain_file(path, ref_chain, quote_kind="vol")
        back = fileio.read_chain_file(path)
        for a, b in zip(back.quotes, ref_chain.quotes):
            assert a.implied_vol == b.implied_vol
            assert a.price == pytest.approx(b.price, abs=1e-12)

    def test_delta_vol_rows_resolved(self):
        text = ("spot = 1\nrate = 0.02\n"
                "maturity_days,strike,delta,option_type,quote_kind,quote\n"
                "252,,0.25,CALL,VOL,0.28\n"
                "126,,-0.10,PUT,VOL,0.31\n")
        chain = fileio.read_chain(io.StringIO(text))
        k0 = hf.strike_from_delta(0.25, 0.28, 1.0, 0.02, 1.0)
        assert chain.quotes[0].spec.strike == pytest.approx(k0, rel=1e-14)
        assert chain.quotes[0].price == pytest.approx(
            hf.bs_price(1.0, 0.02, k0, 1.0, 0.28), rel=1e-14)
        assert chain.quotes[1].spec.option_type is OptionType.PUT

    def test_delta_price_rows_resolved(self):
        k_true = hf.strike_from_delta(0.25, 0.28, 1.0, 0.02, 1.0)
        price = hf.bs_price(1.0, 0.02, k_true, 1.0, 0.28)
        text = ("spot = 1\nrate = 0.02\n"
                "maturity_days,strike,delta,option_type,quote_kind,quote\n"
                f"252,,0.25,CALL,PRICE,{price!r}\n")
        chain = fileio.read_chain(io.StringIO(text))
        assert chain.quotes[0].spec.strike == pytest.approx(k_true, abs=1e-8)
        assert chain.quotes[0].price == price

    @pytest.mark.parametrize("row,message", [
        ("252,1.0,0.25,CALL,PRICE,0.1", "exactly one"),
        ("252,,,CALL,PRICE,0.1", "exactly one"),
        ("252,1.0,,CALL,WRONG,0.1", "quote_kind"),
        ("252,1.0,,STRADDLE,PRICE,0.1", "option_type"),
        ("252,1.0,,CALL,PRICE,-0.1", "non-negative"),
        ("252,1.0,,CALL,PRICE,abc", "bad number"),
    ])
    def test_malformed_rows_rejected(self, row, message):
        text = ("spot = 1\nrate = 0.02\n"
                "maturity_days,strike,delta,option_type,quote_kind,quote\n"
                + row + "\n")
        with pytest.raises(hf.FileFormatError, match=message):
            fileio.read_chain(io.StringIO(text))

    def test_header_required(self):
        with pytest.raises(hf.FileFormatError, match="header"):
            fileio.read_chain(io.StringIO("spot = 1\n252,1.0,,CALL,PRICE,0.1\n"))

    def test_unknown_document_key_rejected(self):
        with pytest.raises(hf.FileFormatError, match="unknown"):
            fileio.read_chain(io.StringIO("notional = 5\n"))


class TestReportDocuments:
    def test_report_document_parses_back(self, ref_chain):
        report = hf.calibrate(ref_chain, REF_PARAMS)
        buf = io.StringIO()
        fileio.write_report(buf, report)
        text = buf.getvalue()
        values = dict(line.split(" = ") for line in text.strip().splitlines())
        assert float(values["kappa"]) == report.theta_final.kappa
        assert values["stop_reason"] == "RESIDUAL"
        assert int(values["iterations"]) == report.iterations

    def test_trace_csv_shape(self, ref_chain):
        report = hf.calibrate(ref_chain, hf.HestonParams(
            v0=0.2, v_bar=0.2, rho=-0.6, kappa=1.2, sigma=0.3))
        buf = io.StringIO()
        fileio.write_trace_csv(buf, report)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0].startswith("v0,")
        assert len(lines) == 1 + len(report.trace)

    def test_validation_stats_document(self):
        stats = hf.run_validation(1, 1, seed=3)
        buf = io.StringIO()
        fileio.write_validation_stats(buf, stats)
        text = buf.getvalue()
        assert "success_rate = 1" in text
        assert "mean_abs_dev_kappa" in text
