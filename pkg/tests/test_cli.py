import json
import math
import subprocess
import sys

import numpy as np
import pytest

from specenhance import SampledSpectrum, fwhm
from specenhance.cli import build_parser, main


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr() if capsys is not None else None
    return code, out


def files(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


class TestParser:
    def test_help_lists_every_flag(self, capsys):
        parser = build_parser()
        sub = next(a for a in parser._actions if a.__class__.__name__ == "_SubParsersAction")
        for name, p in sub.choices.items():
            text = p.format_help()
            for action in p._actions:
                for flag in action.option_strings:
                    assert flag in text, (name, flag)
        with pytest.raises(SystemExit) as info:
            main(["--help"])
        assert info.value.code == 0
        out = capsys.readouterr().out
        for verb in ("synth", "enhance", "experiment", "bound", "fit"):
            assert verb in out

    @pytest.mark.parametrize("argv", [["synth", "--bogus"], ["--bogus", "synth"], ["nope"], []])
    def test_usage_errors_exit_2(self, argv, capsys):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "specenhance", "--help"], capture_output=True, text=True)
        assert proc.returncode == 0 and "experiment" in proc.stdout


class TestSynth:
    def test_outputs_and_determinism(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["synth", "--out", a, "--seed", 5], capsys)[0] == 0
        assert run(["--out", b, "--seed", 5, "synth"], capsys)[0] == 0
        assert files(a) == files(b)
        assert set(files(a)) == {"truth.csv", "spectrum.csv", "noisy.csv"}
        assert SampledSpectrum.from_csv(a / "spectrum.csv").norm() > 0

    def test_rerun_overwrites_identically(self, tmp_path, capsys):
        run(["synth", "--out", tmp_path], capsys)
        first = files(tmp_path)
        run(["synth", "--out", tmp_path], capsys)
        assert files(tmp_path) == first

    def test_noiseless_grid_override(self, tmp_path, capsys):
        code, out = run(["synth", "--out", tmp_path, "--noise-level", 0, "--n", 512, "--length", 32], capsys)
        assert code == 0
        assert json.loads(out.out)["files"] == ["truth.csv", "spectrum.csv"]
        assert SampledSpectrum.from_csv(tmp_path / "spectrum.csv").grid.n == 512

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"lines": [[-2.0, 1.0], [2.0, 0.5]], "noise_level": 0.0}))
        assert run(["synth", "--config", cfg, "--out", tmp_path / "o"], capsys)[0] == 0
        assert (tmp_path / "o" / "truth.csv").read_text() == "location,intensity\n-2,1\n2,0.5\n"

    def test_missing_config(self, tmp_path, capsys):
        code, out = run(["synth", "--config", tmp_path / "nope.json"], capsys)
        assert code == 2 and "nope.json" in out.err

    def test_bad_config_field(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"colour": "red"}))
        assert run(["synth", "--config", cfg, "--out", tmp_path], capsys)[0] == 2


class TestEnhance:
    def test_identity_kernel_returns_input(self, tmp_path, capsys):
        run(["synth", "--out", tmp_path], capsys)
        code, _ = run(
            ["enhance", "--out", tmp_path, "--input", tmp_path / "spectrum.csv",
             "--kernel", '{"family":"EddingtonInverse","k":0}', "--alpha", 0],
            capsys,
        )
        assert code == 0
        a = SampledSpectrum.from_csv(tmp_path / "spectrum.csv")
        b = SampledSpectrum.from_csv(tmp_path / "enhanced.csv")
        assert a.grid == b.grid
        np.testing.assert_allclose(b.values, a.values, rtol=0, atol=1e-15)

    def test_figure_one_setting(self, tmp_path, capsys):
        code, out = run(["enhance", "--out", tmp_path, "--noise-level", 0, "--alpha", 1e-30], capsys)
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert json.loads(out.out) == report
        assert {"alpha", "residual", "psi_norm", "bound", "fwhm"} <= set(report)
        assert report["fwhm"]["ratio"] <= 0.5
        f = SampledSpectrum.from_csv(tmp_path / "enhanced.csv")
        assert fwhm(f) == pytest.approx(report["fwhm"]["after"], rel=1e-12)

    def test_discrepancy_default(self, tmp_path, capsys):
        code, _ = run(["enhance", "--out", tmp_path, "--method", "Tikhonov", "--tau", 1.2], capsys)
        report = json.loads((tmp_path / "report.json").read_text())
        assert code == 0 and 0 < report["alpha"] < 1

    def test_singular_inversion_exit_3(self, tmp_path, capsys):
        code, out = run(
            ["enhance", "--out", tmp_path, "--kernel", '{"family":"LorentzWidth","kappa":4}', "--alpha", 0], capsys
        )
        assert code == 3 and "numeric" in out.err

    @pytest.mark.parametrize(
        "extra",
        [["--kernel", '{"family":"Cauchy"}'], ["--kernel", "{oops"], ["--alpha", "-1"], ["--method", "Nope"]],
    )
    def test_bad_arguments(self, tmp_path, capsys, extra):
        try:
            code, _ = run(["enhance", "--out", tmp_path, *extra], capsys)
        except SystemExit as exc:
            code = exc.code
        assert code == 2


class TestExperiment:
    def test_fig1(self, tmp_path, capsys):
        code, out = run(["experiment", "fig1", "--out", tmp_path], capsys)
        assert code == 0
        lines = out.out.strip().splitlines()
        assert lines[0] == "kappa,fwhm,ratio,min_over_peak,peak"
        ratios = [float(l.split(",")[2]) for l in lines[1:]]
        assert len(ratios) == 4 and ratios == sorted(ratios, reverse=True)
        assert {"fig1_curves.csv", "fig1_widths.csv"} <= set(files(tmp_path))

    def test_fig1_rerun_is_byte_identical(self, tmp_path, capsys):
        run(["experiment", "fig1", "--out", tmp_path / "a", "--kappas", "2,3"], capsys)
        run(["experiment", "fig1", "--out", tmp_path / "b", "--kappas", "2,3"], capsys)
        assert files(tmp_path / "a") == files(tmp_path / "b")

    def test_fig3_alphas(self, tmp_path, capsys):
        code, out = run(["experiment", "fig3", "--out", tmp_path, "--alphas", "0,1e-2", "--seed", 3], capsys)
        assert code == 0
        rows = out.out.strip().splitlines()[1:]
        assert len(rows) == 1 and rows[0].startswith("0.01,")

    def test_rates(self, tmp_path, capsys):
        code, out = run(["experiment", "rates", "--out", tmp_path, "--n", 1024, "--deltas", "1e-2,1e-4"], capsys)
        assert code == 0
        summary = json.loads(out.out)
        assert all(v["all_within_bound"] for v in summary.values())
        assert (tmp_path / "rates.csv").read_text().startswith("condition,delta,alpha,")

    def test_unknown_experiment(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["experiment", "fig9"])
        assert info.value.code == 2


class TestBound:
    def test_rows(self, tmp_path, capsys):
        code, out = run(
            ["bound", "--out", tmp_path, "--condition", '{"kind":"LorentzOnGaussian","kappa":0.7}', "--eps", "1e-3"],
            capsys,
        )
        assert code == 0
        header, row = out.out.strip().splitlines()
        assert header == "epsilon,deficit,exponent,bound"
        assert float(row.split(",")[2]) == pytest.approx(0.467, abs=0.01)
        assert (tmp_path / "bound.csv").read_text() == out.out

    def test_eddington_minimum(self, capsys):
        code, out = run(["bound", "--condition", '{"kind":"EddingtonGaussian","k":1}', "--eps", repr(math.exp(-math.e))],
                        capsys)
        row = out.out.strip().splitlines()[1].split(",")
        assert float(row[2]) == pytest.approx(1 - 1 / math.e, rel=1e-14)

    def test_empty_list(self, capsys):
        code, out = run(["bound", "--condition", '{"kind":"EddingtonGaussian","k":1}'], capsys)
        assert code == 0 and out.out == "epsilon,deficit,exponent,bound\n"

    def test_flagged_rows_kept(self, capsys, caplog):
        code, out = run(["bound", "--condition", '{"kind":"LorentzOnGaussian","kappa":4}', "--eps", "1e-2,1e-200"],
                        capsys)
        assert code == 0
        assert len(out.out.strip().splitlines()) == 3
        assert "vacuous" in caplog.text

    @pytest.mark.parametrize("cond", ['{"kind":"Nope"}', '{"kind":"EddingtonGaussian","k":0}'])
    def test_bad_condition(self, capsys, cond):
        assert run(["bound", "--condition", cond, "--eps", "1e-3"], capsys)[0] == 2

    def test_epsilon_out_of_domain(self, capsys):
        assert run(["bound", "--condition", '{"kind":"EddingtonGaussian","k":1}', "--eps", "0.9"], capsys)[0] == 2


class TestFit:
    @pytest.fixture
    def data(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"grid": {"n": 1024, "length": 64.0}, "lines": [[-3.0, 1.0], [3.0, 2.0]],
                                   "noise_level": 0.0}))
        run(["synth", "--config", cfg, "--out", tmp_path], capsys)
        return tmp_path / "spectrum.csv"

    def test_single(self, data, tmp_path, capsys):
        code, out = run(["fit", "--input", data, "--init=-3.3,2.7", "--out", tmp_path], capsys)
        assert code == 0
        lines = out.out.strip().splitlines()
        assert lines[0] == "line,location,intensity"
        locs = [float(l.split(",")[1]) for l in lines[1:]]
        np.testing.assert_allclose(locs, [-3.0, 3.0], atol=1e-4)
        (report,) = json.loads((tmp_path / "fit.json").read_text())
        assert report["converged"]

    def test_batch(self, data, tmp_path, capsys):
        batch = tmp_path / "batch.json"
        batch.write_text(json.dumps([
            {"data": "spectrum.csv", "kernel": {"family": "GaussianUnit"}, "n_lines": 2,
             "initial_locations": [-2.8, 3.2]},
            {"data": "spectrum.csv", "initial_locations": [-3.1, 2.9]},
        ]))
        code, out = run(["fit", "--batch", batch, "--out", tmp_path / "o"], capsys)
        assert code == 0
        assert len(out.out.strip().splitlines()) == 5
        assert len(json.loads((tmp_path / "o" / "fit.json").read_text())) == 2

    def test_missing_arguments(self, capsys):
        assert run(["fit"], capsys)[0] == 2

    def test_coincident_init_exit_3(self, data, capsys):
        assert run(["fit", "--input", data, "--init", "0,0.01"], capsys)[0] == 3

    def test_batch_mismatch(self, data, tmp_path, capsys):
        batch = tmp_path / "b.json"
        batch.write_text(json.dumps([{"data": "spectrum.csv", "n_lines": 3, "initial_locations": [0.0]}]))
        assert run(["fit", "--batch", batch], capsys)[0] == 2
