"""Top-level command-line interface.

``coaxline <subcommand>`` with subcommands waveguide, coupling, fit,
dispersive, budget, and pipeline.  Exit codes: 0 ok, 2 usage, 3 parse,
4 validation, 5 fit failure.
"""

import argparse
import sys

from . import __version__, pipeline
from .coupling import SeriesKind
from .dataio import parse_config
from .errors import CoaxlineError, UsageError
from .report import Report, to_json, to_text
from .waveguide import ModeId


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coaxline",
        description="Design and measurement analysis for coaxial-line 3D cQED packages.",
    )
    parser.add_argument("--version", action="version", version=f"coaxline {__version__}")
    parser.add_argument(
        "--output", choices=("json", "text"), default="text",
        help="report format (default: text)",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress warning output")
    parser.add_argument(
        "--seed", type=int, default=None,
        help="seed for analyses that synthesize data (reserved; current analyses are deterministic)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("waveguide", help="cutoff and evanescent attenuation")
    p.add_argument("--diameter-mm", type=float, required=True)
    p.add_argument("--loading", type=float, default=None,
                   help="effective permittivity (default: calibrated bare-substrate value)")
    p.add_argument("--mode", default="TE11", help="mode label, e.g. TE11 or TM01")
    p.add_argument("--freq-ghz", type=float, default=None,
                   help="also report attenuation at this frequency")

    p = sub.add_parser("coupling", help="exponential coupling laws")
    csub = p.add_subparsers(dest="coupling_mode", required=True)
    pf = csub.add_parser("fit", help="fit a (distance_mm, value) CSV")
    pf.add_argument("--input", required=True)
    pf.add_argument("--kind", choices=("qc", "g"), required=True)
    pf.add_argument("--fixed-rate-np-per-mm", type=float, default=None)
    pp = csub.add_parser("predict", help="predict Qc at a pin recess distance")
    pp.add_argument("--qc-ref", type=float, required=True)
    pp.add_argument("--d-ref-mm", type=float, required=True)
    pp.add_argument("--d-mm", type=float, required=True)
    pp.add_argument("--alpha-np-per-mm", type=float, required=True)

    p = sub.add_parser("fit", help="fit a complex S21 resonance trace")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("csv", "s2p"), default="csv")
    p.add_argument("--report", default=None, help="also write the report as JSON to this path")
    p.add_argument("--emit-plot-data", default=None, metavar="PATH",
                   help="write fitted curve + residuals CSV for external plotting")
    p.add_argument("--no-refine", action="store_true",
                   help="stop after the two-step fit (skip the 7-parameter refinement)")

    p = sub.add_parser("dispersive", help="device parameter derivations")
    p.add_argument("input", help="device-parameter file (or CSV with --batch)")
    p.add_argument("--batch", action="store_true",
                   help="input is a device-per-row CSV table")

    p = sub.add_parser("budget", help="participation-ratio loss budget")
    p.add_argument("input", help="budget CSV: name,p_min,p_max,q_material,bound_kind")
    p.add_argument("--qi-best", type=float, default=None,
                   help="best measured Qi, for material lower bounds")
    p.add_argument("--sweep-diameter", default=None, metavar="CSV",
                   help="per-diameter participation CSV for Qi limit curves")
    p.add_argument("--sweep-out", default=None, metavar="CSV",
                   help="where to write the limit curves (with --sweep-diameter)")

    p = sub.add_parser("pipeline", help="run analyses from a config file")
    p.add_argument("config")

    return parser


def _run(args) -> Report:
    report = Report()
    if args.command == "waveguide":
        pipeline.run_waveguide(
            report,
            args.diameter_mm * 1e-3,
            args.loading,
            ModeId.parse(args.mode),
            args.freq_ghz * 1e9 if args.freq_ghz is not None else None,
        )
    elif args.command == "coupling":
        if args.coupling_mode == "fit":
            kind = SeriesKind.QC_VS_DEPTH if args.kind == "qc" else SeriesKind.G_VS_SEPARATION
            fixed = (
                args.fixed_rate_np_per_mm * 1e3
                if args.fixed_rate_np_per_mm is not None
                else None
            )
            pipeline.run_coupling_fit(report, args.input, kind, fixed)
        else:
            pipeline.run_coupling_predict(
                report,
                args.qc_ref,
                args.d_ref_mm * 1e-3,
                args.d_mm * 1e-3,
                args.alpha_np_per_mm * 1e3,
            )
    elif args.command == "fit":
        pipeline.run_fit(
            report,
            [args.input],
            fmt=args.format,
            refine=not args.no_refine,
            plot_data_path=args.emit_plot_data,
        )
        if args.report:
            with open(args.report, "w", encoding="utf-8") as fh:
                fh.write(to_json(report))
    elif args.command == "dispersive":
        if args.batch:
            pipeline.run_dispersive_batch(report, args.input)
        else:
            pipeline.run_dispersive(report, args.input)
    elif args.command == "budget":
        if args.sweep_out and not args.sweep_diameter:
            raise UsageError("--sweep-out needs --sweep-diameter")
        pipeline.run_budget(
            report,
            args.input,
            qi_best=args.qi_best,
            sweep_path=args.sweep_diameter,
            sweep_out=args.sweep_out,
        )
    elif args.command == "pipeline":
        with open(args.config, "rb") as fh:
            config_bytes = fh.read()
        config = parse_config(config_bytes, path=args.config)
        report = pipeline.run_pipeline(config, seed=args.seed)
        report.add_input(args.config, config_bytes)
    return report


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = _run(args)
    except FileNotFoundError as exc:
        print(f"coaxline: cannot read input file: {exc.filename}", file=sys.stderr)
        return 3
    except CoaxlineError as exc:
        print(f"coaxline: error: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.output == "json":
        sys.stdout.write(to_json(report))
    else:
        sys.stdout.write(to_text(report, quiet=args.quiet))
    return 0


if __name__ == "__main__":
    sys.exit(main())
