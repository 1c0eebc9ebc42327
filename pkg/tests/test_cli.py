import re

import numpy as np
import pytest

from cmsign import results_io
from cmsign.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def eta_line(text, name):
    return float(re.search(rf"{name}: ([0-9.]+)", text).group(1))


class TestReduce:
    def test_single_subcarrier(self, capsys):
        code, out, _ = run(capsys, "reduce", "--n", 1)
        assert code == 0
        assert "signs: [+1]" in out
        assert eta_line(out, "eta_before") == eta_line(out, "eta_after")

    def test_reproducible(self, capsys):
        first = run(capsys, "reduce", "--n", 32, "--seed", 4, "--trace")
        second = run(capsys, "reduce", "--n", 32, "--seed", 4, "--trace")
        assert first == second
        assert "j,statistic,sign" in first[1]

    def test_not_below_exhaustive(self, capsys):
        for seed in range(5):
            _, ce_out, _ = run(capsys, "reduce", "--n", 10, "--seed", seed, "--scheme", "qpsk")
            _, ex_out, _ = run(capsys, "reduce", "--n", 10, "--seed", seed, "--scheme", "qpsk",
                               "--reducer", "exhaustive")
            assert eta_line(ce_out, "eta_after") >= eta_line(ex_out, "eta_after")

    def test_input_file_and_signal_out(self, capsys, tmp_path):
        src = tmp_path / "sym.txt"
        src.write_text("1,1\n-3,1\n3,-3\n-1,-1\n")
        dst = tmp_path / "sig.txt"
        code, out, _ = run(capsys, "reduce", "--input", src, "--out", dst, "--variant", "chi2")
        assert code == 0
        samples = [complex(*map(float, ln.split(","))) for ln in dst.read_text().splitlines()]
        assert len(samples) == 16
        assert np.mean(np.abs(samples) ** 6) == pytest.approx(eta_line(out, "eta_after"), rel=1e-5)

    def test_bad_input_symbol(self, capsys, tmp_path):
        src = tmp_path / "sym.txt"
        src.write_text("2,2\n")
        code, _, err = run(capsys, "reduce", "--input", src)
        assert code == 2
        assert "usage" in err

    def test_invalid_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["reduce", "--variant", "nope"])
        assert exc.value.code != 0


class TestSimulate:
    def test_writes_outputs(self, capsys, tmp_path):
        code, out, _ = run(capsys, "simulate", "--n", 16, "--symbols", 5, "--seed", 1,
                           "--out", tmp_path / "r")
        assert code == 0
        assert "RCM_orig" in out
        res = results_io.load(tmp_path / "r")
        assert len(res.records) == 5 and res.config.master_seed == 1

    def test_config_file_overridden_by_flags(self, capsys, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("n_subcarriers: 8\nn_symbols: 3\nreducer: none\n")
        run(capsys, "simulate", "--config", cfg, "--symbols", 4, "--out", tmp_path / "r")
        res = results_io.load(tmp_path / "r")
        assert (res.config.n_subcarriers, res.config.n_symbols, res.config.reducer) == (8, 4, "none")

    def test_zero_symbols(self, capsys, tmp_path):
        code, _, err = run(capsys, "simulate", "--n", 8, "--symbols", 0, "--out", tmp_path / "r")
        assert code == 2
        assert not (tmp_path / "r").exists()

    def test_cm_flags(self, capsys, tmp_path):
        code, out, _ = run(capsys, "simulate", "--n", 16, "--symbols", 3, "--out", tmp_path / "r",
                           "--cm-kslp", 1.5, "--cm-kbw", 0.5, "--cm-rcmref", 1.0)
        assert code == 0
        s = results_io.load(tmp_path / "r").config.cm_params
        assert (s.k_slp, s.k_bw, s.rcm_ref_db) == (1.5, 0.5, 1.0)
        code, _, _ = run(capsys, "simulate", "--n", 16, "--cm-kslp", 1.5, "--out", tmp_path / "q")
        assert code == 2

    def test_preset_small(self, capsys, tmp_path):
        code, out, _ = run(capsys, "simulate", "--preset", "fig3-slm", "--symbols", 2,
                           "--out", tmp_path / "p")
        assert code == 0
        for name in ("n64-ce", "n64-slm", "n1024-ce", "n1024-slm"):
            res = results_io.load(tmp_path / "p" / name)
            assert len(res.records) == 2
        assert results_io.load(tmp_path / "p" / "n1024-slm").config.slm_s == 100

    def test_failed_persist_removes_partial_output(self, capsys, tmp_path, monkeypatch):
        def boom(result, path, ccdf_points=200):
            path.mkdir(parents=True)
            (path / "results.csv").write_text("partial")
            raise OSError("disk full")

        monkeypatch.setattr(results_io, "persist", boom)
        with pytest.raises(OSError):
            main(["simulate", "--n", "8", "--symbols", "2", "--out", str(tmp_path / "r")])
        assert not (tmp_path / "r").exists()


class TestOracle:
    def test_qpsk_n8(self, capsys):
        code, out, _ = run(capsys, "oracle", "--scheme", "qpsk", "--n", 8, "--symbols", 100)
        assert code == 0
        assert "(a) exact-CE monotone trace violations: 0" in out
        assert "(b) final eta > initial expectation violations: 0" in out
        assert "(d) exhaustive optimum dominance violations: 0" in out
        assert "(c) alg1" in out and "(c) chi2" in out

    def test_capacity(self, capsys):
        code, _, err = run(capsys, "oracle", "--n", 20)
        assert code == 2
        assert "raise --nf" in err


def test_variance_small(capsys):
    code, out, _ = run(capsys, "variance", "--n", 64, "--symbols", 50, "--alphas", "0,0.5")
    assert code == 0
    assert "0.2500" in out
