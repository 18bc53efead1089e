"""Monte-Carlo detectability of post-merger neutron-star remnants.

Every sample draws its own counter-based Philox stream keyed by the study seed,
so a realization is bit-identical whatever the worker schedule.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm
from tqdm import tqdm

from .errors import ConfigError, NumericError
from .models import EosFit, PopulationModel, Spectrum

logger = logging.getLogger(__name__)

DEFAULT_BAND = (1000.0, 4000.0)
DEFAULT_BAND_POINTS = 3001
REFERENCE_DISTANCE_MPC = 50.0
HISTOGRAM_RANGE = (1e-2, 1e3)
DRAWS_PER_SAMPLE = 8


@dataclass(frozen=True)
class MergerSample:
    m1: float
    m2: float
    distance_mpc: float
    theta: float
    phi: float
    psi: float
    inclination: float
    phase: float
    peak_frequency_hz: float
    excluded: bool
    snr: float | None = None

    @property
    def total_mass(self) -> float:
        return self.m1 + self.m2


@dataclass(frozen=True)
class SampleBatch:
    m1: np.ndarray
    m2: np.ndarray
    distance_mpc: np.ndarray
    cos_theta: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    cos_iota: np.ndarray
    phase: np.ndarray

    @property
    def total_mass(self) -> np.ndarray:
        return self.m1 + self.m2

    def __len__(self) -> int:
        return self.m1.size


@dataclass(frozen=True)
class StudyResult:
    loudest_snr: np.ndarray
    detected: np.ndarray
    excluded_counts: np.ndarray
    histogram_counts: np.ndarray
    histogram_edges: np.ndarray
    threshold: float

    @property
    def detection_fraction(self) -> float:
        return float(self.detected.mean())

    @property
    def realizations(self) -> int:
        return self.loudest_snr.size


def study_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(2, np.uint64)


def draw_uniforms(key: np.ndarray, realization: int, n: int) -> np.ndarray:
    """(n, 8) open-interval uniforms, one Philox counter block per sample."""
    words = np.empty((n, DRAWS_PER_SAMPLE), dtype=np.uint64)
    for index in range(n):
        bits = np.random.Philox(key=key, counter=[0, 0, index, realization])
        words[index] = bits.random_raw(DRAWS_PER_SAMPLE)
    return ((words >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53


def draw_batch(
    model: PopulationModel, n: int, seed: int, realization: int = 0
) -> SampleBatch:
    if n <= 0:
        raise ConfigError(f"sample count must be positive, got {n}", key="samples")
    u = draw_uniforms(study_key(seed), realization, n)
    sigma = model.mass_sigma
    return SampleBatch(
        m1=model.mass_mean + sigma * norm.ppf(u[:, 0]),
        m2=model.mass_mean + sigma * norm.ppf(u[:, 1]),
        distance_mpc=model.max_distance_mpc * np.cbrt(u[:, 2]),
        cos_theta=2 * u[:, 3] - 1,
        phi=2 * np.pi * u[:, 4],
        psi=np.pi * u[:, 5],
        cos_iota=2 * u[:, 6] - 1,
        phase=2 * np.pi * u[:, 7],
    )


def sample_population(
    model: PopulationModel,
    n: int,
    seed: int,
    eos: EosFit | None = None,
    *,
    realization: int = 0,
) -> list[MergerSample]:
    eos = eos or EosFit()
    batch = draw_batch(model, n, seed, realization)
    f_p = peak_frequency(batch.m1, batch.m2, eos)
    excluded = batch.total_mass > model.cutoff_mass
    return [
        MergerSample(
            m1=float(batch.m1[i]),
            m2=float(batch.m2[i]),
            distance_mpc=float(batch.distance_mpc[i]),
            theta=float(np.arccos(batch.cos_theta[i])),
            phi=float(batch.phi[i]),
            psi=float(batch.psi[i]),
            inclination=float(np.arccos(batch.cos_iota[i])),
            phase=float(batch.phase[i]),
            peak_frequency_hz=float(f_p[i]),
            excluded=bool(excluded[i]),
        )
        for i in range(len(batch))
    ]


def peak_frequency(m1, m2, eos: EosFit):
    total = np.asarray(m1, dtype=float) + np.asarray(m2, dtype=float)
    if np.any(total <= 0):
        raise ValueError("binary masses must be positive")
    radius = eos.radius_km
    fit = eos.fit_a2 * radius**2 + eos.fit_a1 * radius + eos.fit_a0
    f_p = eos.fp_scale_hz * total * fit
    return float(f_p) if f_p.ndim == 0 else f_p


def antenna_response(theta, phi, psi, inclination):
    """Quadrupole amplitude factor combining both polarizations."""
    cos_theta = np.cos(theta)
    cos_iota = np.cos(inclination)
    return _antenna_amplitude(cos_theta, phi, psi, cos_iota)


def waveform(f, sample: MergerSample, eos: EosFit) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("waveform frequencies must be positive")
    if sample.distance_mpc <= 0:
        raise ValueError(f"distance must be positive, got {sample.distance_mpc}")
    return _damped_oscillation(
        f,
        np.asarray(sample.peak_frequency_hz),
        np.asarray(sample.distance_mpc),
        np.asarray(sample.phase),
        eos,
    )


def snr(
    sample: MergerSample,
    noise: Spectrum,
    f_min: float = DEFAULT_BAND[0],
    f_max: float = DEFAULT_BAND[1],
    *,
    eos: EosFit | None = None,
    response: str = "quadrupole",
    band_points: int = DEFAULT_BAND_POINTS,
    matched_filter: bool = False,
) -> float:
    eos = eos or EosFit()
    f, inverse_psd = _band_weights(noise, (f_min, f_max), band_points)
    h = waveform(f, sample, eos)
    if response == "quadrupole":
        h = h * antenna_response(
            sample.theta, sample.phi, sample.psi, sample.inclination
        )
    integral = float(np.trapezoid(np.abs(h) ** 2 * inverse_psd, f))
    return math.sqrt(4 * integral) if matched_filter else integral


def batch_snr(
    batch: SampleBatch,
    noise: Spectrum,
    eos: EosFit,
    *,
    band: tuple[float, float] = DEFAULT_BAND,
    band_points: int = DEFAULT_BAND_POINTS,
    response: str = "quadrupole",
    matched_filter: bool = False,
) -> np.ndarray:
    f, inverse_psd = _band_weights(noise, band, band_points)
    f_p = peak_frequency(batch.m1, batch.m2, eos)
    h = _damped_oscillation(
        f[np.newaxis, :],
        np.atleast_1d(f_p)[:, np.newaxis],
        batch.distance_mpc[:, np.newaxis],
        batch.phase[:, np.newaxis],
        eos,
    )
    power = np.abs(h) ** 2
    if response == "quadrupole":
        amplitude = _antenna_amplitude(
            batch.cos_theta, batch.phi, batch.psi, batch.cos_iota
        )
        power *= amplitude[:, np.newaxis] ** 2
    integral = np.trapezoid(power * inverse_psd, f, axis=1)
    return np.sqrt(4 * integral) if matched_filter else integral


def run_study(
    model: PopulationModel,
    eos: EosFit,
    noise: Spectrum,
    seed: int,
    *,
    band: tuple[float, float] = DEFAULT_BAND,
    band_points: int = DEFAULT_BAND_POINTS,
    matched_filter: bool = False,
    bins: int = 25,
    workers: int = 1,
    progress: bool = False,
) -> StudyResult:
    # fail before spawning workers
    _band_weights(noise, band, band_points)

    def loudest(realization: int) -> tuple[float, int]:
        batch = draw_batch(model, model.samples, seed, realization)
        keep = batch.total_mass <= model.cutoff_mass
        excluded = int(keep.size - keep.sum())
        if not keep.any():
            return 0.0, excluded
        values = batch_snr(
            _subset(batch, keep),
            noise,
            eos,
            band=band,
            band_points=band_points,
            response=model.response,
            matched_filter=matched_filter,
        )
        return float(values.max()), excluded

    logger.info(
        "running %d realizations of %d samples with %d worker(s)",
        model.realizations,
        model.samples,
        workers,
    )
    realizations = range(model.realizations)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(
            tqdm(
                executor.map(loudest, realizations),
                total=model.realizations,
                desc="realizations",
                disable=not progress,
            )
        )

    loudest_snr = np.array([value for value, _ in results])
    excluded_counts = np.array([count for _, count in results])
    edges = np.logspace(
        np.log10(HISTOGRAM_RANGE[0]), np.log10(HISTOGRAM_RANGE[1]), bins + 1
    )
    counts, _ = np.histogram(np.clip(loudest_snr, edges[0], edges[-1]), bins=edges)
    detected = loudest_snr >= model.snr_threshold
    logger.info("detection fraction %.3f", detected.mean())
    return StudyResult(
        loudest_snr=loudest_snr,
        detected=detected,
        excluded_counts=excluded_counts,
        histogram_counts=counts,
        histogram_edges=edges,
        threshold=model.snr_threshold,
    )


def expected_events_per_year(model: PopulationModel) -> float:
    volume = 4 / 3 * math.pi * model.max_distance_mpc**3
    return model.rate * volume * 1e-6


def _damped_oscillation(f, f_p, distance_mpc, phase, eos: EosFit) -> np.ndarray:
    q, h_p = eos.q_factor, eos.peak_amplitude
    prefactor = REFERENCE_DISTANCE_MPC / (np.pi * distance_mpc)
    numerator = h_p * q * (
        2 * f_p * q * np.cos(phase) - (f_p - 2j * f * q) * np.sin(phase)
    )
    denominator = f_p**2 - 4j * f * f_p * q - 4 * q**2 * (f**2 - f_p**2)
    return prefactor * numerator / denominator


def _antenna_amplitude(cos_theta, phi, psi, cos_iota):
    base = 0.5 * (1 + cos_theta**2) * np.cos(2 * phi)
    cross = cos_theta * np.sin(2 * phi)
    f_plus = base * np.cos(2 * psi) - cross * np.sin(2 * psi)
    f_cross = base * np.sin(2 * psi) + cross * np.cos(2 * psi)
    return np.sqrt(
        f_plus**2 * (0.5 * (1 + cos_iota**2)) ** 2 + f_cross**2 * cos_iota**2
    )


def _band_weights(
    noise: Spectrum, band: tuple[float, float], band_points: int
) -> tuple[np.ndarray, np.ndarray]:
    f_min, f_max = band
    if f_max <= f_min:
        raise ConfigError(f"empty SNR band {band} Hz", key="band_min_hz")
    if not noise.covers(f_min, f_max):
        raise ConfigError(
            f"noise curve spans {noise.frequencies[0]:.6g}-"
            f"{noise.frequencies[-1]:.6g} Hz, band {band} Hz lies outside",
            key="band_min_hz",
        )
    values = np.real(noise.values)
    if np.any(values <= 0):
        raise NumericError("noise curve must be positive to interpolate")
    f = np.linspace(f_min, f_max, band_points)
    log_psd = np.interp(np.log(f), np.log(noise.frequencies), np.log(values))
    return f, np.exp(-log_psd)


def _subset(batch: SampleBatch, mask: np.ndarray) -> SampleBatch:
    return SampleBatch(
        m1=batch.m1[mask],
        m2=batch.m2[mask],
        distance_mpc=batch.distance_mpc[mask],
        cos_theta=batch.cos_theta[mask],
        phi=batch.phi[mask],
        psi=batch.psi[mask],
        cos_iota=batch.cos_iota[mask],
        phase=batch.phase[mask],
    )

