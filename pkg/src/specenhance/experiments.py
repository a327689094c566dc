"""Synthetic experiments: synthesis, enhancement runs, figure sweeps and rate studies.

All outputs are plain CSV/JSON so they can be plotted elsewhere; an SVG
preview is written on request when matplotlib is importable.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bounds import SourceCondition, eta_exponent, psi_norm, theorem1_bound
from .enhance import (
    Method,
    RegularizationConfig,
    choose_alpha_discrepancy,
    deconvolve,
)
from .errors import BoundInvalidError, ConfigurationError, MeasurementError
from .grid import Grid, LineSpectrum, SampledSpectrum, add_noise, broaden, fwhm
from .kernels import KernelSpec, log_symbol

log = logging.getLogger(__name__)

DEFAULT_SEED = 20090101
# stands in for "alpha -> 0" on noiseless data without dividing by underflowed symbols
MINIMAL_ALPHA = 1e-30

FIG1_KAPPAS = (math.sqrt(2), 2.0, 3.0, 4.0)
FIG2_ALPHAS = (1e-1, 1e-2, 1e-3, 1e-4)
RATE_DELTAS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class ExperimentConfig:
    grid: Grid = field(default_factory=Grid)
    lines: LineSpectrum = field(default_factory=lambda: LineSpectrum((0.0,), (1.0,)))
    broadening: KernelSpec = field(default_factory=KernelSpec.gaussian)
    enhancement: KernelSpec = field(default_factory=lambda: KernelSpec.lorentz(2.0))
    reg: RegularizationConfig = field(default_factory=lambda: RegularizationConfig(alpha=None))
    noise_level: float = 0.05
    seed: int = DEFAULT_SEED
    outputs: str = "out"

    def __post_init__(self):
        if not (self.noise_level >= 0 and math.isfinite(self.noise_level)):
            raise ConfigurationError("noise_level must be a finite non-negative number")
        if len(self.lines) and not self.grid.contains(self.lines.locations):
            raise ConfigurationError("line locations must lie inside the grid domain")

    def to_json(self) -> dict:
        return {
            "grid": self.grid.to_json(),
            "lines": self.lines.to_json(),
            "broadening": self.broadening.to_json(),
            "enhancement": self.enhancement.to_json(),
            "reg": self.reg.to_json(),
            "noise_level": self.noise_level,
            "seed": self.seed,
            "outputs": self.outputs,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        known = {"grid", "lines", "broadening", "enhancement", "reg", "noise_level", "seed", "outputs"}
        unknown = set(obj) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        base = cls()
        try:
            return cls(
                grid=Grid.from_json(obj["grid"]) if "grid" in obj else base.grid,
                lines=LineSpectrum.from_pairs(obj["lines"]) if "lines" in obj else base.lines,
                broadening=KernelSpec.from_json(obj["broadening"]) if "broadening" in obj else base.broadening,
                enhancement=KernelSpec.from_json(obj["enhancement"]) if "enhancement" in obj else base.enhancement,
                reg=RegularizationConfig.from_json(obj["reg"]) if "reg" in obj else base.reg,
                noise_level=float(obj.get("noise_level", base.noise_level)),
                seed=int(obj.get("seed", base.seed)),
                outputs=str(obj.get("outputs", base.outputs)),
            )
        except (TypeError, KeyError) as exc:
            raise ConfigurationError(f"malformed config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")


def synthesize(cfg: ExperimentConfig):
    """Return ``(g, g_delta)``; ``g_delta`` is None without noise."""
    g = broaden(cfg.lines, cfg.broadening, cfg.grid)
    noisy = add_noise(g, cfg.noise_level, cfg.seed) if cfg.noise_level > 0 else None
    return g, noisy


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_table(path, header: Sequence[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if v is None:
        return ""
    return str(v)


def write_curves(path, grid: Grid, columns: dict) -> None:
    header = ["x", *columns]
    data = np.column_stack([grid.x, *columns.values()])
    write_table(path, header, data.tolist())


def _svg(path, grid: Grid, columns: dict, title: str, xlim=(-8, 8)) -> bool:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not available; skipping %s", path)
        return False
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, vals in columns.items():
        ax.plot(grid.x, vals, label=name, lw=1)
    ax.set_xlim(*xlim)
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return True


# commands


def run_synth(cfg: ExperimentConfig, out=None) -> dict:
    out = _outdir(out or cfg.outputs)
    g, noisy = synthesize(cfg)
    cfg.lines.to_csv(out / "truth.csv")
    g.to_csv(out / "spectrum.csv")
    written = ["truth.csv", "spectrum.csv"]
    if noisy is not None:
        noisy.to_csv(out / "noisy.csv")
        written.append("noisy.csv")
    return {"files": written, "spectrum_norm": g.norm()}


def enhance_spectrum(
    data: SampledSpectrum,
    enhancement: KernelSpec,
    reg: RegularizationConfig,
    delta: Optional[float] = None,
    condition: Optional[SourceCondition] = None,
    reference: Optional[SampledSpectrum] = None,
):
    """Deconvolve, choosing alpha by discrepancy when ``reg.alpha`` is None."""
    if reg.alpha is None:
        if delta:
            alpha = choose_alpha_discrepancy(data, enhancement, delta, reg.method, reg.tau)
        else:
            alpha = MINIMAL_ALPHA
        reg = reg.with_alpha(alpha)
    return deconvolve(data, enhancement, reg, condition=condition, reference=reference)


def run_enhance(cfg: ExperimentConfig, out=None, input_path=None) -> dict:
    """Enhance the configured (or supplied) spectrum and write enhanced.csv and report.json."""
    out = _outdir(out or cfg.outputs)
    if input_path is not None:
        data = SampledSpectrum.from_csv(Path(input_path))
        reference = None
        delta = cfg.noise_level * data.norm() / math.sqrt(1 + cfg.noise_level**2) if cfg.noise_level else None
    else:
        g, noisy = synthesize(cfg)
        data = noisy if noisy is not None else g
        reference = g
        delta = cfg.noise_level * g.norm() if noisy is not None else None
    cond = SourceCondition.for_kernels(cfg.broadening, cfg.enhancement)
    try:
        res = enhance_spectrum(data, cfg.enhancement, cfg.reg, delta, cond, reference)
    except BoundInvalidError as exc:
        log.warning("bound not available: %s", exc)
        res = enhance_spectrum(data, cfg.enhancement, cfg.reg, delta, None, reference)
    res.f_alpha.to_csv(out / "enhanced.csv")
    report = res.to_json()
    before = after = None
    try:
        before = fwhm(data)
        after = fwhm(res.f_alpha)
    except MeasurementError as exc:
        log.warning("FWHM not measurable: %s", exc)
    report["fwhm"] = {
        "before": before,
        "after": after,
        "ratio": after / before if before and after else None,
    }
    report["condition"] = cond.to_json() if cond is not None else None
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return report


def fig1(cfg: ExperimentConfig, out=None, kappas=FIG1_KAPPAS, svg=False) -> dict:
    """Lorentz correction of a noiseless Gaussian line for several kappa."""
    grid = cfg.grid
    g = broaden(cfg.lines, cfg.broadening, grid)
    w0 = fwhm(g)
    curves = {"g": g.values}
    rows = []
    for kappa in kappas:
        res = deconvolve(g, KernelSpec.lorentz(kappa), RegularizationConfig(cfg.reg.method, MINIMAL_ALPHA))
        f = res.f_alpha
        w = fwhm(f)
        peak = float(f.values.max())
        rows.append((kappa, w, w / w0, float(f.values.min()) / peak, peak))
        curves[f"kappa={kappa:.4g}"] = f.values / peak
    curves["g"] = g.values / g.values.max()
    header = ("kappa", "fwhm", "ratio", "min_over_peak", "peak")
    if out is not None:
        out = _outdir(out)
        write_curves(out / "fig1_curves.csv", grid, curves)
        write_table(out / "fig1_widths.csv", header, rows)
        if svg:
            _svg(out / "fig1.svg", grid, curves, "Lorentz correction of a Gaussian line")
    return {"widths": rows, "header": header, "curves": curves, "fwhm_g": w0}


def _alpha_ladder(cfg, kappa, alphas, noise_level, seed, out, name, svg):
    grid = cfg.grid
    g = broaden(cfg.lines, cfg.broadening, grid)
    data = add_noise(g, noise_level, seed) if noise_level > 0 else g
    kernel = KernelSpec.lorentz(kappa)
    w0 = fwhm(g)
    curves = {"g": g.values}
    if noise_level > 0:
        curves["g_delta"] = data.values
    rows = []
    x = grid.x
    far = np.abs(x) > 3.0 * w0
    for alpha in alphas:
        res = deconvolve(data, kernel, RegularizationConfig(cfg.reg.method, alpha))
        f = res.f_alpha
        try:
            w = fwhm(f)
        except MeasurementError:
            w = math.nan
        err = (f - _exact_enhancement(g, kernel)).norm()
        rows.append((alpha, w, w / w0, res.residual_epsilon, float(np.max(np.abs(f.values[far]))), err))
        curves[f"alpha={alpha:g}"] = f.values
    header = ("alpha", "fwhm", "ratio", "residual", "far_amplitude", "error")
    if out is not None:
        out = _outdir(out)
        write_curves(out / f"{name}_curves.csv", grid, curves)
        write_table(out / f"{name}_widths.csv", header, rows)
        if svg:
            _svg(out / f"{name}.svg", grid, curves, f"Regularized Lorentz correction, kappa={kappa:g}")
    return {"widths": rows, "header": header, "curves": curves, "fwhm_g": w0}


def _exact_enhancement(g: SampledSpectrum, kernel: KernelSpec) -> SampledSpectrum:
    # noiseless B^-1 g, only used where g is band limited well inside the grid
    grid = g.grid
    ghat = g.fourier()
    lb = np.asarray(log_symbol(kernel, grid.omega))
    mag = np.abs(ghat)
    keep = mag > 1e-13 * mag.max()
    fhat = np.zeros_like(ghat)
    fhat[keep] = ghat[keep] * np.exp(-lb[keep])
    return SampledSpectrum.from_fourier(grid, fhat)


def fig2(cfg: ExperimentConfig, out=None, kappa=2.0, alphas=FIG2_ALPHAS, svg=False) -> dict:
    """Regularized Lorentz correction (kappa = 2) over an alpha ladder, noiseless."""
    return _alpha_ladder(cfg, kappa, alphas, 0.0, cfg.seed, out, "fig2", svg)


def fig3(cfg: ExperimentConfig, out=None, kappa=2.0, alphas=FIG2_ALPHAS, noise_level=0.05, svg=False) -> dict:
    """As :func:`fig2` with relative data error (alpha = 0 is never used)."""
    alphas = tuple(a for a in alphas if a > 0)
    return _alpha_ladder(cfg, kappa, alphas, noise_level, cfg.seed, out, "fig3", svg)


# rates


RATE_CONDITIONS = (
    SourceCondition.lorentz_on_gaussian(1.0),
    SourceCondition.lorentz_on_voigt(1.0, 0.5),
    SourceCondition.eddington(1),
    SourceCondition.eddington(2),
    SourceCondition.stokes_gaussian(0.5),
)


@dataclass
class RateRow:
    condition: str
    delta: float
    alpha: float
    epsilon: float
    error: float
    c_psi: float
    g_psi: float
    bound: float
    deficit: float
    model: float

    @property
    def within_bound(self) -> bool:
        return self.error <= self.bound


def rate_sweep(
    cond: SourceCondition,
    grid: Optional[Grid] = None,
    deltas=RATE_DELTAS,
    seed: int = DEFAULT_SEED,
    line_width: float = 0.5,
    tau: float = 1.1,
) -> list:
    """Measured error against the interpolation bound over noise levels.

    The underlying spectrum is a single line of Gaussian shape
    ``line_width`` (so that it lies in L2), broadened by the condition's
    kernel. Data errors of absolute norm ``delta`` are added, alpha is
    chosen by the discrepancy principle for the spectral cutoff, and the
    error is measured against the exact enhanced spectrum.
    """
    grid = grid or Grid()
    w = grid.omega
    enh = cond.enhancement_kernel()
    log_u = -0.5 * (line_width * w) ** 2
    log_g = np.asarray(log_symbol(cond.broadening_kernel(), w)) + log_u
    log_b = np.asarray(log_symbol(enh, w))
    g = SampledSpectrum.from_fourier(grid, np.exp(log_g))
    f = SampledSpectrum.from_fourier(grid, np.exp(log_g - log_b))
    g_psi = psi_norm(g, cond, enh)
    gnorm = g.norm()
    rows = []
    for delta in deltas:
        data = add_noise(g, delta / gnorm, seed)
        alpha = choose_alpha_discrepancy(data, enh, delta, Method.SPECTRAL_CUTOFF, tau)
        res = deconvolve(data, enh, RegularizationConfig(Method.SPECTRAL_CUTOFF, alpha, tau))
        bf = SampledSpectrum.from_fourier(grid, res.f_alpha.fourier() * np.exp(log_b))
        eps = (bf - g).norm()
        c_psi = psi_norm(bf, cond, enh)
        err = (res.f_alpha - f).norm()
        try:
            bound = theorem1_bound(eps, c_psi + g_psi, cond)
        except BoundInvalidError as exc:
            log.warning("%s", exc)
            bound = math.nan
        deficit = eta_exponent(cond, min(eps, math.exp(-1)), strict=False)
        rows.append(
            RateRow(cond.kind.value, delta, alpha, eps, err, c_psi, g_psi, bound, deficit, eps ** (1 - deficit))
        )
    return rows


def loglog_slope(rows) -> float:
    eps = np.log([r.epsilon for r in rows])
    err = np.log([r.error for r in rows])
    return float(np.polyfit(eps, err, 1)[0])


RATE_HEADER = (
    "condition", "delta", "alpha", "epsilon", "error", "c_psi", "g_psi", "bound", "deficit", "model", "within_bound",
)


def rates(cfg: ExperimentConfig, out=None, conditions=RATE_CONDITIONS, deltas=RATE_DELTAS) -> dict:
    table = []
    summary = {}
    for cond in conditions:
        rows = rate_sweep(cond, cfg.grid, deltas, cfg.seed)
        table.extend(rows)
        mid = float(np.exp(np.mean(np.log([r.epsilon for r in rows]))))
        summary[json.dumps(cond.to_json(), sort_keys=True)] = {
            "slope": loglog_slope(rows),
            "deficit_mid": eta_exponent(cond, min(mid, math.exp(-1)), strict=False),
            "epsilon_mid": mid,
            "all_within_bound": all(r.within_bound for r in rows),
        }
    if out is not None:
        out = _outdir(out)
        write_table(
            out / "rates.csv",
            RATE_HEADER,
            [
                (r.condition, r.delta, r.alpha, r.epsilon, r.error, r.c_psi, r.g_psi, r.bound, r.deficit, r.model,
                 r.within_bound)
                for r in table
            ],
        )
        (out / "rates_summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return {"rows": table, "summary": summary}


def bound_rows(cond: SourceCondition, epsilons, c_plus_gpsi: float = 1.0) -> list:
    """Rows ``(epsilon, deficit, exponent, bound, flagged)``.

    Rows whose deficit reaches one are flagged, never dropped.
    """
    rows = []
    for eps in epsilons:
        deficit = eta_exponent(cond, eps, strict=False)
        try:
            bound = theorem1_bound(eps, c_plus_gpsi, cond)
        except BoundInvalidError:
            bound = math.nan
        rows.append((eps, deficit, 1.0 - deficit, bound, deficit >= 1.0))
    return rows


EXPERIMENTS = {"fig1": fig1, "fig2": fig2, "fig3": fig3, "rates": rates}


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
