import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from memfract import config
from memfract.config import AnalysisConfig
from memfract.cvdata import CvRun, RunSet, parse_cv_csv, write_cv_csv
from memfract.errors import AnalysisError, InputError, NoAdmissibleCoupleError
from memfract.models import ElementKind, SweepShape
from memfract.plot import Plotter
from memfract.report import AnalysisReport, Analyzer
from memfract.spikes import detect_spikes, pooled_interval_histogram
from memfract.synth import (
    MemristorParams,
    simulate_linear_element,
    simulate_memristor,
    triangular_sweep,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ANALYSIS = 3
EXIT_INTERNAL = 4


def read_run_set(paths: list[Path], vertex_time: Optional[float] = None) -> RunSet:
    runs = []
    for path in paths:
        with open(path, "rb") as f:
            runs.append(parse_cv_csv(f, label=str(path)))
    return RunSet(runs=runs, vertex_time=vertex_time)


def _config_from_args(args: argparse.Namespace) -> AnalysisConfig:
    return AnalysisConfig.load(
        args.config,
        degree=args.degree,
        piecewise=args.piecewise,
        alpha_step=getattr(args, "alpha_step", None),
        grid_points=getattr(args, "grid_points", None),
        singular_delta=getattr(args, "singular_delta", None),
        spike_k=getattr(args, "spike_k", None),
        lattice_file=getattr(args, "lattice", None),
        output_dir=getattr(args, "output_dir", None),
    )


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    output.write_text(text)
    logger.info("wrote %s", output)


def cmd_fit(args: argparse.Namespace) -> int:
    analysis_config = _config_from_args(args)
    run_set = read_run_set(args.inputs, args.vertex_time)
    summary = Analyzer(analysis_config).fit(run_set)
    for fit in (summary.voltage_fit, summary.current_fit):
        logger.info(
            "%s fit of degree %d: R^2 %s",
            fit.quantity,
            fit.degree,
            ", ".join(f"{piece.stats.r_squared:.6f}" for piece in fit.pieces),
        )
    _emit(summary.json(indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    analysis_config = _config_from_args(args)
    run_set = read_run_set(args.inputs, args.vertex_time)
    report = Analyzer(analysis_config).analyze(run_set)

    output_dir = analysis_config.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / "report.json").write_text(report.json(indent=2) + "\n")
    (output_dir / "envelope.csv").write_text(report.envelope.to_csv())
    (output_dir / "spike_intervals.csv").write_text(report.spike_intervals.to_csv())
    logger.info("report written to %s", output_dir / "report.json")

    if not args.no_plots:
        Plotter(output_dir).create_all(report)
    return EXIT_OK


def cmd_spikes(args: argparse.Namespace) -> int:
    run_set = read_run_set(args.inputs)
    trains = [detect_spikes(run, args.spike_k, args.window) for run in run_set.runs]
    histogram = pooled_interval_histogram(trains, args.bin_width)
    if args.output_dir is None:
        for run, train in zip(run_set.runs, trains):
            sys.stdout.write(f"# {run.label}\n{train.to_csv()}")
        sys.stdout.write(f"# intervals\n{histogram.to_csv()}")
        return EXIT_OK

    args.output_dir.mkdir(parents=True, exist_ok=True)
    for k, train in enumerate(trains):
        _emit(train.to_csv(), args.output_dir / f"spikes_{k}.csv")
    _emit(histogram.to_csv(), args.output_dir / "spike_intervals.csv")
    return EXIT_OK


def _synthesize(args: argparse.Namespace) -> CvRun:
    vpp = args.vpp if args.vpp is not None else (2.0 if args.kind == "memristor" else 1.0)
    sweep = triangular_sweep(vpp / 2, args.n, args.delay, SweepShape(args.shape))
    if args.kind == "sweep":
        return CvRun(
            time=sweep.time,
            voltage=sweep.voltage,
            current=0.0 * sweep.voltage,
            sweep_range=sweep.sweep_range,
            step_delay=sweep.step_delay,
            label="synthetic sweep",
        )
    if args.kind == "memristor":
        return simulate_memristor(MemristorParams(), sweep)
    value = {"resistor": args.r, "capacitor": args.c, "inductor": args.l}[args.kind]
    return simulate_linear_element(ElementKind(args.kind), value, sweep)


def cmd_synth(args: argparse.Namespace) -> int:
    _emit(write_cv_csv(_synthesize(args)), args.output)
    return EXIT_OK


def cmd_schema(args: argparse.Namespace) -> int:
    _emit(AnalysisReport.schema_json(indent=2) + "\n", args.output)
    return EXIT_OK


def _add_analysis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("inputs", nargs="+", type=Path, help="t,v,i CSV runs")
    parser.add_argument("--config", type=Path, help="JSON file of AnalysisConfig fields")
    parser.add_argument("--degree", type=int)
    parser.add_argument("--piecewise", action="store_true", default=None)
    parser.add_argument("--vertex-time", type=float, help="T for piecewise fits, detected if omitted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memfract", description="Memfractance analysis of cyclic voltammetry data"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", help="fit v(t) and i(t) with polynomials")
    _add_analysis_flags(fit)
    fit.add_argument("--output", type=Path)
    fit.set_defaults(handler=cmd_fit)

    analyze = commands.add_parser("analyze", help="full memfractance analysis")
    _add_analysis_flags(analyze)
    analyze.add_argument("--alpha-step", type=float)
    analyze.add_argument("--grid-points", type=int)
    analyze.add_argument("--singular-delta", type=float)
    analyze.add_argument("--spike-k", type=float)
    analyze.add_argument("--lattice", type=Path)
    analyze.add_argument("--output-dir", type=Path)
    analyze.add_argument("--no-plots", action="store_true")
    analyze.set_defaults(handler=cmd_analyze)

    synth = commands.add_parser("synth", help="write a synthetic CV run as CSV")
    synth.add_argument("kind", choices=["sweep", "memristor", *(kind.value for kind in ElementKind)])
    synth.add_argument("--vpp", type=float, help="peak-to-peak sweep voltage")
    synth.add_argument("--n", type=int, default=401)
    synth.add_argument("--delay", type=float, default=0.01)
    synth.add_argument("--shape", choices=[shape.value for shape in SweepShape], default=SweepShape.BIPOLAR.value)
    synth.add_argument("--r", type=float, default=1000.0)
    synth.add_argument("--c", type=float, default=1e-6)
    synth.add_argument("--l", type=float, default=1e-3)
    synth.add_argument("--output", type=Path)
    synth.set_defaults(handler=cmd_synth)

    spikes = commands.add_parser("spikes", help="spike trains and their voltage intervals")
    spikes.add_argument("inputs", nargs="+", type=Path)
    spikes.add_argument("--spike-k", type=float, default=4.0)
    spikes.add_argument("--window", type=float, default=0.05)
    spikes.add_argument("--bin-width", type=float, default=0.01)
    spikes.add_argument("--output-dir", type=Path)
    spikes.set_defaults(handler=cmd_spikes)

    schema = commands.add_parser("schema", help="print the JSON schema of the analysis report")
    schema.add_argument("--output", type=Path)
    schema.set_defaults(handler=cmd_schema)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=config.LOG_LEVEL)
    args = build_parser().parse_args(argv)

    try:
        return args.handler(args)
    except FileNotFoundError as e:
        logger.error("no such file: %s", e.filename)
        return EXIT_INPUT
    except (InputError, ValidationError) as e:
        logger.error("invalid input: %s", e)
        return EXIT_INPUT
    except NoAdmissibleCoupleError as e:
        logger.error("%s (refine with --alpha-step or time_tolerance in --config)", e)
        return EXIT_ANALYSIS
    except AnalysisError as e:
        logger.error("analysis failed: %s", e)
        return EXIT_ANALYSIS
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
