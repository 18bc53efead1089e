import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from src import astro, budget, exactcavity, fullmodel, twomode
from src.config import load_config
from src.errors import ConfigError, NumericError
from src.models import RunConfig, Spectrum
from src.results import build_meta, emit
from src.utils.logging import setup_logging
from tools.config_schemas import export_config_schemas

logger = logging.getLogger("qe-sim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

Columns = dict[str, Any]
CommandResult = tuple[Columns, dict[str, Any]]


def _require_defined(label: str, frequencies: np.ndarray, values) -> None:
    invalid = np.isnan(values)
    if np.any(invalid):
        index = int(np.argmax(invalid))
        raise NumericError(
            f"{label} is undefined", frequency_hz=float(frequencies[index])
        )


def model_spectrum(config: RunConfig) -> Spectrum:
    cfg = config.detector
    frequencies = config.grid.frequencies()
    omega = 2 * np.pi * frequencies

    if config.model == "twomode":
        values = twomode.strain_psd_twomode(cfg, config.chi, omega)
        rates = twomode.derive_rates(cfg, config.chi)
        unstable = np.full(omega.shape, rates.above_threshold)
    elif config.model == "exact":
        params = exactcavity.ChainParams.from_detector(cfg)
        unstable = exactcavity.exact_transfer(params, omega).unstable
        values = exactcavity.strain_psd_exact(params, omega, cfg.arm_length)
    else:
        spectra = fullmodel.homodyne_psd(cfg, config.readout, omega)
        scale = fullmodel.strain_normalization(cfg, omega, spectra.chi_eff)
        values = scale * spectra.s_x
        unstable = spectra.unstable

    _require_defined(f"{config.model} spectrum", frequencies, values)
    return Spectrum(frequencies, values, unstable)


def run_spectrum(config: RunConfig) -> CommandResult:
    spectrum = model_spectrum(config)
    if config.asd:
        name, values = "strain_asd", spectrum.asd()
    else:
        name, values = "strain_psd", spectrum.values
    columns = {
        "frequency_hz": spectrum.frequencies,
        name: values,
        "unstable": spectrum.unstable,
    }
    return columns, {"model": config.model}


def run_qcrb(config: RunConfig) -> CommandResult:
    omega = config.grid.omega()
    cfg = config.detector
    frequencies = config.grid.frequencies()
    qcrb = twomode.qcrb_psd(cfg, config.chi, omega)
    _require_defined("quantum Cramér-Rao bound", frequencies, qcrb)
    return {
        "frequency_hz": frequencies,
        "qcrb_psd": qcrb,
        "twomode_psd": twomode.strain_psd_twomode(cfg, config.chi, omega),
    }, {}


def run_budget(config: RunConfig) -> CommandResult:
    noise = budget.decompose(config.detector, config.readout, config.grid)
    _require_defined("noise budget", noise.frequencies, noise.total)
    columns: Columns = {"frequency_hz": noise.frequencies, "total": noise.total}
    columns.update(noise.contributions)
    return columns, {}


def run_bandwidth(config: RunConfig) -> CommandResult:
    cfg = config.detector
    rows: dict[str, list[Any]] = {
        "chi_over_gamma": [],
        "chi_rad_s": [],
        "gamma_q_hz": [],
        "half_power_hz": [],
        "expansion_ratio": [],
        "above_threshold": [],
    }
    for fraction in config.bandwidth_fractions:
        chi = twomode.chi_from_fraction(cfg, fraction)
        rates = twomode.derive_rates(cfg, chi)
        rows["chi_over_gamma"].append(fraction)
        rows["chi_rad_s"].append(chi)
        rows["gamma_q_hz"].append(rates.gamma_q / (2 * np.pi))
        rows["half_power_hz"].append(
            twomode.half_power_bandwidth(cfg, chi) / (2 * np.pi)
        )
        rows["expansion_ratio"].append(rates.expansion_ratio)
        rows["above_threshold"].append(rates.above_threshold)
    baseline = twomode.derive_rates(cfg, 0.0)
    return rows, {
        "gamma_baseline_hz": baseline.gamma_baseline / (2 * np.pi),
        "sloshing_hz": baseline.omega_s / (2 * np.pi),
        "se_bandwidth_hz": baseline.gamma / (2 * np.pi),
    }


def run_sweep(config: RunConfig) -> CommandResult:
    benefit = budget.benefit_map(
        config.detector,
        config.loss_grid,
        config.detector.q_ext,
        config.gain_grid,
        band=config.band,
        grid=config.grid,
    )
    invalid = np.argwhere(np.isnan(benefit.improvement_db))
    if invalid.size:
        i, j = invalid[0]
        raise NumericError(
            f"band improvement is undefined at total loss {benefit.losses[i]:g}"
            f" and gain {benefit.gains[j]:g}"
        )
    rows: dict[str, list[Any]] = {
        "total_loss": [],
        "gain_fraction": [],
        "improvement_db": [],
        "optimal": [],
    }
    for i, loss in enumerate(benefit.losses):
        best = int(np.argmax(benefit.improvement_db[i]))
        for j, fraction in enumerate(benefit.gains):
            rows["total_loss"].append(float(loss))
            rows["gain_fraction"].append(float(fraction))
            rows["improvement_db"].append(float(benefit.improvement_db[i, j]))
            rows["optimal"].append(j == best)
    return rows, {
        "band_hz": list(config.band),
        "optimal_gain": benefit.optimal_gain,
        "optimal_improvement_db": benefit.optimal_improvement_db,
    }


def run_montecarlo(config: RunConfig, *, progress: bool = True) -> CommandResult:
    if config.noise_curve is not None:
        try:
            noise = Spectrum.from_csv(config.noise_curve)
        except ValueError as error:
            raise ConfigError(str(error), key="noise_curve") from error
        source = str(config.noise_curve)
    else:
        noise = model_spectrum(config)
        source = config.model

    result = astro.run_study(
        config.population,
        config.eos,
        noise,
        config.seed,
        band=config.band,
        band_points=config.band_points,
        matched_filter=config.matched_filter,
        bins=config.histogram_bins,
        workers=config.workers,
        progress=progress,
    )
    columns = {
        "realization": np.arange(result.realizations),
        "loudest_snr": result.loudest_snr,
        "detected": result.detected,
    }
    return columns, {
        "noise_curve": source,
        "detection_fraction": result.detection_fraction,
        "histogram": {
            "edges": result.histogram_edges,
            "counts": result.histogram_counts,
        },
        "excluded_samples": int(result.excluded_counts.sum()),
        "expected_events_per_year": astro.expected_events_per_year(config.population),
    }


COMMANDS: dict[str, Callable[..., CommandResult]] = {
    "spectrum": run_spectrum,
    "qcrb": run_qcrb,
    "budget": run_budget,
    "bandwidth": run_bandwidth,
    "sweep": run_sweep,
    "montecarlo": run_montecarlo,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Flat key = value config file")
    common.add_argument("--preset", help="Detector preset from presets.yaml")
    common.add_argument("--model", choices=("twomode", "exact", "full"))
    common.add_argument("--chi-over-gamma", type=float, help="Internal gain fraction")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--output", type=Path, help="Write results here, not stdout")
    common.add_argument("--meta", type=Path, help="Also write metadata JSON here")
    common.add_argument("--seed", type=int, help="Monte-Carlo seed")
    common.add_argument(
        "--asd", action="store_true", default=None, help="Emit sqrt(S_h)"
    )
    common.add_argument("--workers", type=int, help="Monte-Carlo worker threads")
    common.add_argument("--noise-curve", type=Path, help="Two-column S_h CSV")
    common.add_argument(
        "--no-progress", action="store_true", help="Hide the realization bar"
    )
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        prog="qe-sim",
        description="Quantum-noise spectra of a detector with an internal squeezer",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common])
    schemas = subparsers.add_parser("schemas", parents=[common])
    schemas.add_argument("directory", type=Path)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "preset": args.preset,
        "model": args.model,
        "chi_over_gamma": args.chi_over_gamma,
        "format": args.format,
        "seed": args.seed,
        "asd": args.asd,
        "workers": args.workers,
        "noise_curve": args.noise_curve,
    }


def _execute(args: argparse.Namespace) -> None:
    if args.command == "schemas":
        for path in export_config_schemas(args.directory):
            logger.info("exported %s", path)
        return

    config = load_config(args.config, _overrides(args))
    if args.command == "montecarlo" and config.seed is None:
        config = config.model_copy(
            update={"seed": int(np.random.SeedSequence().entropy)}
        )
        logger.info("no seed given, drew %d", config.seed)

    handler = COMMANDS[args.command]
    if args.command == "montecarlo":
        columns, extra = handler(config, progress=not args.no_progress)
    else:
        columns, extra = handler(config)
    meta = build_meta(args.command, config, config.seed, **extra)
    emit(columns, meta, config.format, output=args.output, meta_path=args.meta)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(logging.DEBUG if args.verbose else logging.INFO)

    try:
        _execute(args)
    except ConfigError as error:
        logger.error("configuration error: %s", error)
        return EXIT_CONFIG
    except NumericError as error:
        logger.error("numeric failure: %s", error)
        return EXIT_NUMERIC
    except OSError as error:
        logger.error("i/o failure: %s", error)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
