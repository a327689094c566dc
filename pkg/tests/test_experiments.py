import json
import math
from types import SimpleNamespace

import numpy as np
import pytest

from specenhance import Grid, KernelSpec, LineSpectrum, RegularizationConfig, SampledSpectrum, SourceCondition
from specenhance import experiments as ex
from specenhance.errors import ConfigurationError


@pytest.fixture
def cfg():
    return ex.ExperimentConfig()


class TestConfig:
    def test_defaults(self, cfg):
        assert cfg.grid == Grid(4096, 64.0)
        assert cfg.seed == 20090101
        assert cfg.enhancement == KernelSpec.lorentz(2.0)
        assert cfg.reg.alpha is None

    def test_json_round_trip(self, tmp_path):
        cfg = ex.ExperimentConfig(
            grid=Grid(512, 32.0),
            lines=LineSpectrum((-1.0, 2.0), (1.0, 0.5)),
            broadening=KernelSpec.voigt(0.3),
            enhancement=KernelSpec.eddington(2),
            reg=RegularizationConfig("SpectralCutoff", 1e-4, 1.3),
            noise_level=0.0,
            seed=7,
            outputs="elsewhere",
        )
        cfg.dump(tmp_path / "c.json")
        assert ex.ExperimentConfig.load(tmp_path / "c.json") == cfg

    def test_partial_json_uses_defaults(self):
        cfg = ex.ExperimentConfig.from_json({"seed": 3})
        assert cfg.seed == 3 and cfg.grid == Grid()

    @pytest.mark.parametrize(
        "obj",
        [{"colour": 1}, {"noise_level": -0.1}, {"lines": [[100.0, 1.0]]}, {"grid": {"n": 8}}],
    )
    def test_rejects(self, obj):
        with pytest.raises((ConfigurationError, KeyError)):
            ex.ExperimentConfig.from_json(obj)

    def test_bad_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{not json")
        with pytest.raises(ConfigurationError):
            ex.ExperimentConfig.load(p)

    def test_overrides_skip_none(self, cfg):
        assert ex.with_overrides(cfg, seed=None, noise_level=0.0).noise_level == 0.0
        assert ex.with_overrides(cfg, seed=None).seed == cfg.seed


class TestSynth:
    def test_files(self, cfg, tmp_path):
        info = ex.run_synth(cfg, tmp_path)
        assert info["files"] == ["truth.csv", "spectrum.csv", "noisy.csv"]
        assert info["spectrum_norm"] > 0
        assert (tmp_path / "truth.csv").read_text() == "location,intensity\n0,1\n"
        g = SampledSpectrum.from_csv(tmp_path / "spectrum.csv")
        noisy = SampledSpectrum.from_csv(tmp_path / "noisy.csv")
        assert (noisy - g).norm() / g.norm() == pytest.approx(0.05, rel=1e-9)

    def test_noiseless(self, cfg, tmp_path):
        info = ex.run_synth(ex.with_overrides(cfg, noise_level=0.0), tmp_path)
        assert "noisy.csv" not in info["files"]
        assert not (tmp_path / "noisy.csv").exists()


class TestEnhance:
    def test_report_keys(self, cfg, tmp_path):
        report = ex.run_enhance(cfg, tmp_path)
        on_disk = json.loads((tmp_path / "report.json").read_text())
        assert on_disk == report
        assert {"alpha", "residual", "psi_norm", "bound", "fwhm"} <= set(report)
        assert report["condition"] == {"kind": "LorentzOnGaussian", "kappa": 2.0}
        assert report["fwhm"]["ratio"] < 1

    def test_minimal_alpha_without_noise(self, cfg, tmp_path):
        report = ex.run_enhance(ex.with_overrides(cfg, noise_level=0.0), tmp_path)
        assert report["alpha"] == ex.MINIMAL_ALPHA
        assert report["fwhm"]["ratio"] <= 0.5


class TestFigures:
    def test_fig1(self, cfg, tmp_path):
        res = ex.fig1(cfg, tmp_path)
        rows = res["widths"]
        ratios = [r[2] for r in rows]
        assert [r[0] for r in rows] == list(ex.FIG1_KAPPAS)
        assert all(b < a for a, b in zip(ratios, ratios[1:]))
        assert 0.45 <= ratios[0] <= 0.55 and 0.18 <= ratios[-1] <= 0.25
        assert all(r[3] < 0 for r in rows if r[0] >= 2)
        header = (tmp_path / "fig1_curves.csv").read_text().splitlines()[0]
        assert header.startswith("x,g,kappa=")

    def test_fig2_regularization_broadens(self, cfg, tmp_path):
        rows = ex.fig2(cfg, tmp_path)["widths"]
        widths = [r[1] for r in rows]  # alpha from 1e-1 down to 1e-4
        assert all(b < a for a, b in zip(widths, widths[1:]))
        assert (tmp_path / "fig2_widths.csv").exists()

    def test_fig3_excludes_zero_alpha(self, cfg):
        rows = ex.fig3(cfg, None, alphas=(0.0, 1e-2))["widths"]
        assert [r[0] for r in rows] == [1e-2]

    @pytest.mark.parametrize("seed", [1, 2, 3, 20090101])
    def test_noise_hits_far_oscillations(self, cfg, seed):
        clean = ex.fig2(cfg, None, alphas=(1e-4,))["widths"][0]
        noisy = ex.fig3(ex.with_overrides(cfg, seed=seed), None, alphas=(1e-4,))["widths"][0]
        assert noisy[4] > clean[4]

    def test_svg_optional(self, cfg, tmp_path):
        pytest.importorskip("matplotlib")
        ex.fig1(cfg, tmp_path, kappas=(2.0,), svg=True)
        assert (tmp_path / "fig1.svg").read_text().lstrip().startswith("<?xml")


class TestRates:
    def test_slope_helper(self):
        rows = [SimpleNamespace(epsilon=e, error=3 * e**0.7) for e in (1e-2, 1e-4, 1e-6)]
        assert ex.loglog_slope(rows) == pytest.approx(0.7, rel=1e-12)

    def test_outputs(self, cfg, tmp_path):
        conds = (SourceCondition.eddington(1),)
        res = ex.rates(ex.with_overrides(cfg, grid=Grid(1024, 64.0)), tmp_path, conditions=conds,
                       deltas=(1e-2, 1e-4))
        lines = (tmp_path / "rates.csv").read_text().splitlines()
        assert lines[0] == ",".join(ex.RATE_HEADER)
        assert len(lines) == 3
        summary = json.loads((tmp_path / "rates_summary.json").read_text())
        assert summary == res["summary"]
        (entry,) = summary.values()
        assert entry["all_within_bound"]

    def test_bound_rows_flag_instead_of_drop(self):
        rows = ex.bound_rows(SourceCondition.lorentz_on_gaussian(4.0), [1e-2, 1e-200])
        assert len(rows) == 2
        assert rows[0][4] and not rows[1][4]
        assert rows[0][2] == pytest.approx(1 - rows[0][1])

    def test_bound_rows_examples(self):
        (row,) = ex.bound_rows(SourceCondition.lorentz_on_gaussian(0.7), [1e-3])
        assert row[2] == pytest.approx(0.467, abs=0.01)
        (row,) = ex.bound_rows(SourceCondition.eddington(1), [math.exp(-math.e)])
        assert row[2] == pytest.approx(1 - 1 / math.e, rel=1e-14)
        assert ex.bound_rows(SourceCondition.eddington(1), []) == []


def test_fmt():
    assert ex._fmt(True) == "true"
    assert ex._fmt(np.int64(3)) == "3"
    assert ex._fmt(0.1) == "0.10000000000000001"
    assert ex._fmt(None) == ""
