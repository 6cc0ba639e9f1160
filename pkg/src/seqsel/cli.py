"""Command-line interface.

Exit codes: 0 success, 2 configuration errors, 1 anything else.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from . import harness
from .harness import ConfigError
from .nli import CostModelInput, cost_rm_per_2d

__all__ = ["main"]


def _add_config_source(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--config", metavar="PATH", help="flat key = value config file")
    group.add_argument(
        "--preset",
        metavar="NAME",
        help="packaged preset name (see 'seqsel presets'); default desk",
    )


def _load_config(args: argparse.Namespace) -> harness.RunConfig:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return harness.parse_config(path.read_text())
    return harness.load_preset(args.preset or "desk")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqsel",
        description="Cost/gain analysis of nonlinearity-aware sequence selection",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute the configured sweep and write results")
    _add_config_source(p)
    p.add_argument("--out", metavar="DIR", required=True, help="output directory")
    p.add_argument(
        "--workers",
        type=int,
        default=None,
        metavar="N",
        help="parallel workers (default: SEQSEL_WORKERS or 1; does not affect results)",
    )
    p.add_argument("--cache", metavar="PATH", help="coefficient cache file override")
    p.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering"
    )

    p = sub.add_parser("cost", help="evaluate the selection cost model")
    p.add_argument("--Nt", type=int, required=True, help="candidates per block")
    p.add_argument("--nsxs", type=float, required=True, help="samples per symbol")
    p.add_argument("--N", type=int, required=True, help="FFT size (samples per block)")
    p.add_argument("--Nst", type=int, required=True, help="propagation steps")
    p.add_argument("--Nsb", type=int, default=1, help="sub-bands (default 1)")

    p = sub.add_parser("fit", help="fit phase-filter taps and fill the cache")
    _add_config_source(p)
    p.add_argument("--cache", metavar="PATH", help="cache file (default from config)")

    p = sub.add_parser("presets", help="list packaged presets")
    p.add_argument("--show", metavar="NAME", help="print the full preset text")

    p = sub.add_parser("report", help="render figures from an existing records.csv")
    p.add_argument("--csv", metavar="PATH", required=True)
    p.add_argument("--out", metavar="DIR", help="figure directory (default: CSV's)")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    records = harness.run_sweep(cfg, cache_path=args.cache, workers=args.workers)
    csv_path, manifest_path = harness.emit_results(records, args.out, cfg)
    for r in records:
        print(
            f"N_t={r.n_t:<4d} N_st={r.n_st:<6s} SE={r.se:.4f} bit/s/Hz  "
            f"cost={r.cost:.1f}  metric={r.mean_metric:.3e}"
        )
    print(f"wrote {csv_path} and {manifest_path}")
    if not args.no_figures:
        from .report import render_figures

        for p in render_figures(records, args.out):
            print(f"wrote {p}")
    return 0


def _cmd_cost(args: argparse.Namespace) -> int:
    try:
        value = cost_rm_per_2d(
            CostModelInput(
                n_t=args.Nt,
                n_sxs=args.nsxs,
                fft_size=args.N,
                n_steps=args.Nst,
                n_subbands=args.Nsb,
            )
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"{value:.12g}")
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    cache = args.cache or cfg.coeff_cache or "coeffs.jsonl"
    coeffs = harness.ensure_coefficients(cfg, cache)
    for n_st in sorted(coeffs):
        taps = ", ".join(f"{c:.6e}" for c in coeffs[n_st])
        print(f"N_st={n_st}: [{taps}]")
    print(f"cache: {cache}")
    return 0


def _cmd_presets(args: argparse.Namespace) -> int:
    if args.show:
        print(harness.preset_text(args.show), end="")
        return 0
    for name in harness.preset_names():
        print(name)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    csv_path = Path(args.csv)
    records = harness.load_records_csv(csv_path)
    out = args.out or csv_path.parent
    from .report import render_figures

    for p in render_figures(records, out):
        print(f"wrote {p}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "cost": _cmd_cost,
    "fit": _cmd_fit,
    "presets": _cmd_presets,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
