import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigError
from .fullmodel import NOISE_SOURCES, strain_psd_full, with_gain
from .models import DetectorConfig, FrequencyGrid, ReadoutConfig

logger = logging.getLogger(__name__)

DEFAULT_BAND = (1000.0, 4000.0)
MAX_GAIN_FRACTION = 0.9999
GAIN_TOLERANCE = 1e-4
FLAT_TOLERANCE_DB = 0.2
SEARCH_POINTS = 41


@dataclass(frozen=True)
class NoiseBudget:
    frequencies: np.ndarray
    total: np.ndarray
    contributions: dict[str, np.ndarray]

    def fractions(self) -> dict[str, np.ndarray]:
        return {name: value / self.total for name, value in self.contributions.items()}


@dataclass(frozen=True)
class BenefitMap:
    losses: np.ndarray
    gains: np.ndarray
    improvement_db: np.ndarray
    optimal_gain: np.ndarray
    optimal_improvement_db: np.ndarray


@dataclass(frozen=True)
class OptimalGain:
    fraction: float
    improvement_db: float
    flat: bool


def decompose(
    cfg: DetectorConfig, readout: ReadoutConfig, grid: FrequencyGrid | np.ndarray
) -> NoiseBudget:
    frequencies = _frequencies(grid)
    omega = 2 * np.pi * frequencies
    contributions = {
        name: strain_psd_full(cfg, readout, omega, ports=(name,))
        for name in NOISE_SOURCES
    }
    return NoiseBudget(
        frequencies=frequencies,
        total=strain_psd_full(cfg, readout, omega),
        contributions=contributions,
    )


def caves_snr(eta: float, r: float, q: float) -> float:
    if not 0 < eta <= 1:
        raise ValueError(f"detection efficiency must lie in (0, 1], got {eta}")
    if r < 0 or q < 0:
        raise ValueError("squeeze factors must be non-negative")
    # numerator and denominator divided by exp(2q)
    return eta / ((1 - eta) * math.exp(-2 * q) + eta * math.exp(-2 * r))


def band_improvement_db(
    cfg: DetectorConfig,
    readout: ReadoutConfig,
    fraction: float,
    band: tuple[float, float] = DEFAULT_BAND,
    grid: FrequencyGrid | np.ndarray | None = None,
) -> float:
    frequencies = _band_frequencies(band, grid)
    baseline = _band_sensitivity(_without_gain(cfg), readout, frequencies)
    expanded = _band_sensitivity(with_gain(cfg, fraction), readout, frequencies)
    return 10 * math.log10(expanded / baseline)


def benefit_map(
    cfg_base: DetectorConfig,
    loss_grid: Sequence[float],
    q_ext: float,
    gain_grid: Sequence[float],
    *,
    band: tuple[float, float] = DEFAULT_BAND,
    grid: FrequencyGrid | np.ndarray | None = None,
) -> BenefitMap:
    """Broadband improvement of the expander over the same detector without it.

    Each total loss is split evenly between SE-internal loss and readout loss.
    """
    losses = np.asarray(loss_grid, dtype=float)
    gains = np.asarray(gain_grid, dtype=float)
    if losses.size == 0 or gains.size == 0:
        raise ConfigError("loss and gain grids must be non-empty", key="loss_grid")
    frequencies = _band_frequencies(band, grid)

    improvement = np.empty((losses.size, gains.size))
    for i, loss in enumerate(losses):
        cfg = cfg_base.model_copy(
            update={
                "se_loss": loss / 2,
                "eta": 1 - loss / 2,
                "q_ext": q_ext,
                "q": 0.0,
            }
        )
        readout = ReadoutConfig.from_detector(cfg)
        baseline = _band_sensitivity(cfg, readout, frequencies)
        for j, fraction in enumerate(gains):
            expanded = _band_sensitivity(with_gain(cfg, fraction), readout, frequencies)
            improvement[i, j] = 10 * math.log10(expanded / baseline)
        logger.debug("total loss %.4g: best %.3f dB", loss, improvement[i].max())

    best = np.argmax(improvement, axis=1)
    return BenefitMap(
        losses=losses,
        gains=gains,
        improvement_db=improvement,
        optimal_gain=gains[best],
        optimal_improvement_db=improvement[np.arange(losses.size), best],
    )


def optimize_gain(
    cfg: DetectorConfig,
    readout: ReadoutConfig,
    band: tuple[float, float] = DEFAULT_BAND,
    *,
    grid: FrequencyGrid | np.ndarray | None = None,
) -> OptimalGain:
    """Threshold fraction maximizing the band-integrated inverse strain PSD.

    Negative fractions anti-squeeze the signal quadrature.
    """
    frequencies = _band_frequencies(band, grid)
    baseline = _band_sensitivity(_without_gain(cfg), readout, frequencies)

    def objective(fraction: float) -> float:
        expanded = _band_sensitivity(with_gain(cfg, fraction), readout, frequencies)
        return 10 * math.log10(expanded / baseline)

    fractions = np.linspace(-MAX_GAIN_FRACTION, MAX_GAIN_FRACTION, SEARCH_POINTS)
    values = np.array([objective(fraction) for fraction in fractions])
    if values.max() - values.min() < FLAT_TOLERANCE_DB:
        logger.info("gain objective is flat over %s Hz", band)
        return OptimalGain(fraction=0.0, improvement_db=0.0, flat=True)

    best = int(np.argmax(values))
    if best in (0, fractions.size - 1) or not (
        values[best] > values[best - 1] and values[best] > values[best + 1]
    ):
        return OptimalGain(
            fraction=float(fractions[best]),
            improvement_db=float(values[best]),
            flat=False,
        )

    result = minimize_scalar(
        lambda fraction: -objective(fraction),
        bracket=(fractions[best - 1], fractions[best], fractions[best + 1]),
        method="golden",
        tol=GAIN_TOLERANCE,
    )
    return OptimalGain(
        fraction=float(result.x), improvement_db=float(-result.fun), flat=False
    )


def _band_sensitivity(
    cfg: DetectorConfig, readout: ReadoutConfig, frequencies: np.ndarray
) -> float:
    strain = strain_psd_full(cfg, readout, 2 * np.pi * frequencies)
    return float(np.trapezoid(1 / strain, frequencies))


def _band_frequencies(
    band: tuple[float, float], grid: FrequencyGrid | np.ndarray | None
) -> np.ndarray:
    frequencies = _frequencies(grid if grid is not None else FrequencyGrid())
    f_min, f_max = band
    if f_min < frequencies[0] or f_max > frequencies[-1] or f_max <= f_min:
        raise ConfigError(
            f"band {band} Hz is not covered by the frequency grid", key="band_min_hz"
        )
    inside = frequencies[(frequencies >= f_min) & (frequencies <= f_max)]
    if inside.size < 2:
        raise ConfigError(
            f"band {band} Hz holds fewer than two grid points", key="band_min_hz"
        )
    return inside


def _frequencies(grid: FrequencyGrid | np.ndarray) -> np.ndarray:
    if isinstance(grid, FrequencyGrid):
        return grid.frequencies()
    return np.asarray(grid, dtype=float)


def _without_gain(cfg: DetectorConfig) -> DetectorConfig:
    return cfg.model_copy(update={"q": 0.0})
