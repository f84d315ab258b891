"""
Command-line interface

Usage:
    python main.py simulate  [--config run.ini] [--output out]   # spectra + peaks CSV
    python main.py peaks     --spectra out/spectra.csv            # peaks from a spectra CSV
    python main.py fit       --peaks out/peak_dataset.csv         # fitted report JSON
    python main.py report                                         # report JSON, no fitting
    python main.py gap                                            # coupling strength and gaps
    python main.py fractions [--normalization bogoliubov]         # Hopfield fractions over the grid

Global flags: --config --output --model {quadratic,hopfield} --polarization {te,tm} --seed --verbose
Exit codes: 0 success, 2 validation error, 3 numerical failure
"""

import argparse
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional

from app.services import csv_store, pipeline
from app.services.fitting.dataset import read_dataset, write_dataset
from app.services.optics.dielectric import film_absorption_spectrum
from app.services.optics.peaks import empty_cavity_mode, peaks_to_frame
from app.services.optics.tmm import SPECTRUM_COLUMNS, frame_to_spectra, spectra_to_frame
from app.services.report_service import build_report, fractions_table, gap_summary, significant
from app.utils.config import RunConfig, load_config
from app.utils.errors import DatasetError, PolaritonError
from app.utils.logger import setup_logging

logger = logging.getLogger(__name__)

SPECTRA_FILE = "spectra.csv"
PEAKS_FILE = "peaks.csv"
DATASET_FILE = "peak_dataset.csv"
ABSORPTION_FILE = "film_absorption.csv"
FIT_REPORT_FILE = "fit_report.json"
REPORT_FILE = "report.json"
GAP_FILE = "gap.json"
FRACTIONS_FILE = "fractions.csv"


def _load(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "fit.model": getattr(args, "model", None),
        "stack.polarization": getattr(args, "polarization", None),
        "fit.seed": getattr(args, "seed", None),
        "io.output_dir": getattr(args, "output", None),
    }
    return load_config(getattr(args, "config", None), overrides)


def _write_peaks(cfg: RunConfig, spectra) -> None:
    peaks = pipeline.extract(spectra, cfg)
    csv_store.save_frame(peaks_to_frame(peaks), cfg.output_dir / PEAKS_FILE)
    try:
        dataset = pipeline.assign_branches(peaks, cfg)
    except DatasetError as e:
        logger.warning("⚠️ No branch dataset written: %s", e)
        return
    write_dataset(dataset, cfg.output_dir / DATASET_FILE)
    logger.info("💾 Wrote %d branch rows (%d LP, %d UP) to %s", len(dataset), dataset.lp_count,
                dataset.up_count, cfg.output_dir / DATASET_FILE)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    film = pipeline.build_film(cfg.film)
    stack = pipeline.build_stack(cfg.stack, film)
    energies = cfg.grid.energies

    try:
        mode = empty_cavity_mode(stack, 0.0, energies, cfg.stack.polarization)
        logger.info("🔎 Empty cavity mode at 0 deg: %.4f eV (detuning %+.4f eV)", mode, mode - cfg.film.e_res)
    except PolaritonError as e:
        logger.warning("⚠️ %s", e)

    spectra = pipeline.simulate(cfg, film)
    csv_store.save_frame(spectra_to_frame(spectra), cfg.output_dir / SPECTRA_FILE)
    csv_store.save_frame(film_absorption_spectrum(film, energies), cfg.output_dir / ABSORPTION_FILE)
    _write_peaks(cfg, spectra)
    return 0


def cmd_peaks(args: argparse.Namespace) -> int:
    cfg = _load(args)
    source = Path(args.spectra) if args.spectra else cfg.output_dir / SPECTRA_FILE
    spectra = frame_to_spectra(csv_store.load_frame(source, SPECTRUM_COLUMNS))
    _write_peaks(cfg, spectra)
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    cfg = _load(args)
    source = Path(args.peaks) if args.peaks else cfg.output_dir / DATASET_FILE
    dataset = read_dataset(source)
    result = pipeline.fit(dataset, cfg)
    report = build_report(cfg, fit=result, normalization=args.normalization)
    csv_store.save_json(report, cfg.output_dir / FIT_REPORT_FILE)
    print(f"rabi = {report['coupling']['rabi']:.4f} eV, eta = {report['coupling']['eta']:.4f}, "
          f"rms = {report['fit']['rms_ev']:.2e} eV")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    cfg = _load(args)
    report = build_report(cfg, normalization=args.normalization)
    csv_store.save_json(report, cfg.output_dir / REPORT_FILE)
    normal = report["normal_incidence"]
    print(f"LP(0) = {normal['lp']:.4f} eV, UP(0) = {normal['up']:.4f} eV, "
          f"LP exciton fraction = {normal['lp_fractions']['exciton']:.3f}")
    return 0


def cmd_gap(args: argparse.Namespace) -> int:
    cfg = _load(args)
    summary = significant(gap_summary(cfg.coupling))
    csv_store.save_json(summary, cfg.output_dir / GAP_FILE)
    line = f"eta = {summary['eta']:.4f} ({summary['regime']}), gap formula = {summary['gap_formula_ev'] * 1e3:.1f} meV"
    if summary["gap_asymptotic_ev"] is not None:
        line += f", asymptotic = {summary['gap_asymptotic_ev'] * 1e3:.1f} meV"
    print(line)
    return 0


def cmd_fractions(args: argparse.Namespace) -> int:
    cfg = _load(args)
    table = fractions_table(cfg.coupling, cfg.cavity, cfg.grid.angles, cfg.model, args.normalization)
    csv_store.save_frame(table, cfg.output_dir / FRACTIONS_FILE)
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "simulate": cmd_simulate,
    "peaks": cmd_peaks,
    "fit": cmd_fit,
    "report": cmd_report,
    "gap": cmd_gap,
    "fractions": cmd_fractions,
}


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags sit before or after the subcommand
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--config", default=argparse.SUPPRESS, help="INI run configuration")
    flags.add_argument("--output", default=argparse.SUPPRESS, help="output directory")
    flags.add_argument("--model", choices=["quadratic", "hopfield"], default=argparse.SUPPRESS)
    flags.add_argument("--polarization", choices=["te", "tm"], default=argparse.SUPPRESS)
    flags.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="fit restart seed")
    flags.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)
    return flags


def build_parser() -> argparse.ArgumentParser:
    flags = _global_flags()
    parser = argparse.ArgumentParser(prog="polariton-usc", parents=[flags],
                                     description="Ultrastrong-coupling polariton toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    sub.add_parser("simulate", parents=[flags], help="transfer-matrix spectra and peaks over the angle grid")
    peaks = sub.add_parser("peaks", parents=[flags], help="extract peaks from a spectra CSV")
    peaks.add_argument("--spectra", help="spectra CSV (default <output>/spectra.csv)")
    fit = sub.add_parser("fit", parents=[flags], help="fit a peak dataset")
    fit.add_argument("--peaks", help="peak dataset CSV (default <output>/peak_dataset.csv)")
    report = sub.add_parser("report", parents=[flags], help="report for explicit parameters")
    fractions = sub.add_parser("fractions", parents=[flags], help="Hopfield fractions over the angle grid")
    for p in (fit, report, fractions):
        p.add_argument("--normalization", choices=["probability", "bogoliubov"], default="probability")
    sub.add_parser("gap", parents=[flags], help="normalized coupling and polariton gap")
    return parser


def run_cli(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2

    setup_logging(getattr(args, "verbose", False))
    logger.debug("🚀 Running %s", args.command)
    try:
        return COMMANDS[args.command](args)
    except PolaritonError as e:
        logger.error("❌ %s: %s", type(e).__name__, e)
        return e.exit_code
