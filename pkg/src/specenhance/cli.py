"""Command line front end.

Verbs: ``synth``, ``enhance``, ``experiment <name>``, ``bound`` and ``fit``.
Exit status is 0 on success, 2 for configuration or usage errors and 3 for
numeric failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .bounds import SourceCondition
from .enhance import RegularizationConfig
from .errors import ConfigurationError, NumericError
from .fitting import FitProblem, varpro_fit
from .grid import Grid, SampledSpectrum
from .kernels import KernelSpec

log = logging.getLogger("specenhance")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _json_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}") from exc


def _float_list(text):
    if not text.strip():
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers: {text!r}") from exc


def _global_options(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", type=Path, default=default, help="experiment config JSON")
    parser.add_argument("--out", type=Path, default=default, help="output directory")
    parser.add_argument("--seed", type=int, default=default, help="noise seed")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def _grid_options(p):
    p.add_argument("--n", type=int, help="grid points (power of two)")
    p.add_argument("--length", type=float, help="grid length L")
    p.add_argument("--noise-level", type=float, help="relative data error")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specenhance",
        description="Spectral resolution enhancement by regularized deconvolution.",
    )
    _global_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("synth", parents=[common], help="write truth.csv, spectrum.csv and noisy.csv")
    _grid_options(p)

    p = sub.add_parser("enhance", parents=[common], help="enhance a spectrum; writes enhanced.csv and report.json")
    _grid_options(p)
    p.add_argument("--input", type=Path, help="spectrum CSV (x,value); default: synthesize from config")
    p.add_argument("--kernel", type=_json_arg, help='enhancement kernel JSON, e.g. \'{"family":"LorentzWidth","kappa":2}\'')
    p.add_argument("--method", choices=["Tikhonov", "SpectralCutoff"])
    p.add_argument("--alpha", type=float, help="fixed regularization parameter (default: discrepancy)")
    p.add_argument("--tau", type=float, help="discrepancy safety factor (> 1)")

    p = sub.add_parser("experiment", parents=[common], help="reproduce a figure or the rate study")
    p.add_argument("name", choices=sorted(ex.EXPERIMENTS))
    _grid_options(p)
    p.add_argument("--kappas", type=_float_list, help="fig1 kappa list")
    p.add_argument("--alphas", type=_float_list, help="fig2/fig3 alpha ladder")
    p.add_argument("--deltas", type=_float_list, help="rates noise levels")
    p.add_argument("--svg", action="store_true", help="also write an SVG line plot")

    p = sub.add_parser("bound", parents=[common], help="tabulate exponent deficits and bounds")
    p.add_argument("--condition", type=_json_arg, required=True, help='source condition JSON, e.g. \'{"kind":"LorentzOnGaussian","kappa":0.7}\'')
    p.add_argument("--eps", type=_float_list, default=[], help="comma separated data errors")
    p.add_argument("--c-plus-gpsi", type=float, default=1.0, help="C + ||g||_psi (default 1)")

    p = sub.add_parser("fit", parents=[common], help="variable projection line fit")
    p.add_argument("--input", type=Path, help="spectrum CSV to fit")
    p.add_argument("--kernel", type=_json_arg, help="line shape kernel JSON (default unit Gaussian)")
    p.add_argument("--init", type=_float_list, help="initial line locations")
    p.add_argument("--batch", type=Path, help="JSON array of fit problems")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--gtol", type=float, default=1e-8)
    p.add_argument("--undamped", action="store_true", help="plain Gauss-Newton without line search")
    return parser


def _config(args) -> ex.ExperimentConfig:
    cfg = ex.ExperimentConfig.load(args.config) if getattr(args, "config", None) else ex.ExperimentConfig()
    n = getattr(args, "n", None)
    length = getattr(args, "length", None)
    if n is not None or length is not None:
        cfg = ex.with_overrides(cfg, grid=Grid(n or cfg.grid.n, length or cfg.grid.length))
    cfg = ex.with_overrides(cfg, noise_level=getattr(args, "noise_level", None), seed=getattr(args, "seed", None))
    return cfg


def _out(args, cfg) -> Path:
    return Path(getattr(args, "out", None) or cfg.outputs)


def cmd_synth(args) -> int:
    cfg = _config(args)
    info = ex.run_synth(cfg, _out(args, cfg))
    print(json.dumps(info))
    return 0


def cmd_enhance(args) -> int:
    cfg = _config(args)
    if args.kernel is not None:
        cfg = ex.with_overrides(cfg, enhancement=KernelSpec.from_json(args.kernel))
    if args.method or args.alpha is not None or args.tau is not None:
        reg = cfg.reg
        cfg = ex.with_overrides(
            cfg,
            reg=RegularizationConfig(
                args.method or reg.method,
                args.alpha if args.alpha is not None else reg.alpha,
                args.tau if args.tau is not None else reg.tau,
            ),
        )
    report = ex.run_enhance(cfg, _out(args, cfg), input_path=args.input)
    print(json.dumps(report))
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    name = args.name
    if name == "fig1":
        res = ex.fig1(cfg, out, kappas=args.kappas or ex.FIG1_KAPPAS, svg=args.svg)
    elif name in ("fig2", "fig3"):
        fn = ex.fig2 if name == "fig2" else ex.fig3
        kw = {"alphas": args.alphas or ex.FIG2_ALPHAS, "svg": args.svg}
        if name == "fig3" and cfg.noise_level > 0:
            kw["noise_level"] = cfg.noise_level
        res = fn(cfg, out, **kw)
    else:
        res = ex.rates(cfg, out, deltas=args.deltas or ex.RATE_DELTAS)
        print(json.dumps(res["summary"], indent=2))
        return 0
    print(",".join(res["header"]))
    for row in res["widths"]:
        print(",".join(ex._fmt(v) for v in row))
    return 0


def cmd_bound(args) -> int:
    cond = SourceCondition.from_json(args.condition)
    rows = ex.bound_rows(cond, args.eps, args.c_plus_gpsi)
    header = ("epsilon", "deficit", "exponent", "bound")
    lines = [",".join(header)] + [",".join(ex._fmt(v) for v in row[:4]) for row in rows]
    text = "\n".join(lines) + "\n"
    out = getattr(args, "out", None)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "bound.csv").write_text(text, encoding="utf-8", newline="")
    sys.stdout.write(text)
    for row in rows:
        if row[4]:
            log.warning("epsilon=%g: deficit %.6g >= 1, bound is vacuous", row[0], row[1])
    return 0


def _fit_one(data, kernel, init, args):
    problem = FitProblem(data, kernel, len(init), tuple(init))
    return varpro_fit(problem, max_iter=args.max_iter, gtol=args.gtol, damped=not args.undamped)


def cmd_fit(args) -> int:
    out = getattr(args, "out", None)
    results = []
    if args.batch is not None:
        base = args.batch.parent
        try:
            problems = json.loads(args.batch.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{args.batch}: invalid JSON ({exc})") from exc
        if not isinstance(problems, list):
            raise ConfigurationError("batch file must hold a JSON array of fit problems")
        for item in problems:
            data = SampledSpectrum.from_csv(base / item["data"])
            kernel = KernelSpec.from_json(item.get("kernel", {"family": "GaussianUnit"}))
            init = item["initial_locations"]
            if item.get("n_lines", len(init)) != len(init):
                raise ConfigurationError("n_lines does not match initial_locations")
            results.append(_fit_one(data, kernel, init, args))
    else:
        if args.input is None or not args.init:
            raise ConfigurationError("fit needs --input and --init, or --batch")
        data = SampledSpectrum.from_csv(args.input)
        kernel = KernelSpec.from_json(args.kernel) if args.kernel else KernelSpec.gaussian()
        results.append(_fit_one(data, kernel, args.init, args))

    rows = []
    for res in results:
        for loc, inten in zip(res.locations, res.intensities):
            rows.append((len(rows), loc, inten))
    text = "line,location,intensity\n" + "".join(f"{i},{a:.17g},{b:.17g}\n" for i, a, b in rows)
    report = [r.to_json() for r in results]
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "fit.csv").write_text(text, encoding="utf-8", newline="")
        (out / "fit.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(text)
    if not all(r.converged for r in results):
        log.warning("some fits did not converge")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "enhance": cmd_enhance,
    "experiment": cmd_experiment,
    "bound": cmd_bound,
    "fit": cmd_fit,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"specenhance: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"specenhance: I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"specenhance: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (KeyError, TypeError, ValueError) as exc:
        print(f"specenhance: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
