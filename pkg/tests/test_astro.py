import math
import unittest
from dataclasses import replace

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from scipy.integrate import quad
from scipy.stats import norm

from src.astro import (
    antenna_response,
    expected_events_per_year,
    peak_frequency,
    run_study,
    sample_population,
    snr,
    waveform,
)
from src.budget import optimize_gain
from src.config import parse_config
from src.errors import ConfigError
from src.fullmodel import strain_psd_full, with_gain
from src.models import (
    DetectorConfig,
    EosFit,
    FrequencyGrid,
    PopulationModel,
    ReadoutConfig,
    Spectrum,
)
from src.twomode import derive_rates, strain_psd_twomode

EOS = EosFit()


def flat_noise(level: float = 1e-48) -> Spectrum:
    return Spectrum(np.array([1.0, 1e5]), np.array([level, level]))


def canonical_sample(**changes):
    sample = sample_population(PopulationModel(), 1, seed=11)[0]
    changes.setdefault("m1", 1.33)
    changes.setdefault("m2", 1.33)
    f_p = peak_frequency(changes["m1"], changes["m2"], EOS)
    return replace(sample, peak_frequency_hz=f_p, **changes)


class PeakFrequencyTest(unittest.TestCase):
    def test_canonical_binary_lands_near_3_khz(self) -> None:
        radius = 14.42
        expected = 2.66 * (5.503 * radius**2 - 0.5495 * radius + 0.0157)

        f_p = peak_frequency(1.33, 1.33, EOS)

        self.assertTrue(math.isclose(f_p, expected, rel_tol=1e-12))
        self.assertAlmostEqual(f_p, 3022.7, delta=0.5)

    def test_kilohertz_prefactor(self) -> None:
        literal = EosFit(fp_scale_hz=1000.0)

        self.assertAlmostEqual(peak_frequency(1.33, 1.33, literal) / 1e6, 3.02, 2)

    def test_linear_in_total_mass(self) -> None:
        self.assertAlmostEqual(
            peak_frequency(1.6, 1.6, EOS) / peak_frequency(0.8, 0.8, EOS), 2.0, 12
        )

    def test_non_positive_mass_is_rejected(self) -> None:
        with self.assertRaises(ValueError):
            peak_frequency(0.0, 0.0, EOS)


class WaveformTest(unittest.TestCase):
    def test_amplitude_falls_with_distance(self) -> None:
        f = np.linspace(1000.0, 4000.0, 50)

        near = waveform(f, canonical_sample(distance_mpc=50.0), EOS)
        far = waveform(f, canonical_sample(distance_mpc=100.0), EOS)

        assert_allclose(np.abs(far), np.abs(near) / 2, rtol=1e-12)

    def test_zero_phase_closed_form(self) -> None:
        sample = canonical_sample(distance_mpc=50.0, phase=0.0)
        f_p, q, h_p = sample.peak_frequency_hz, EOS.q_factor, EOS.peak_amplitude
        f = np.array([1500.0, f_p, 3500.0])

        denominator = f_p**2 - 4j * f * f_p * q - 4 * q**2 * (f**2 - f_p**2)
        expected = (50.0 / (math.pi * 50.0)) * 2 * h_p * f_p * q**2 / denominator

        assert_allclose(waveform(f, sample, EOS), expected, rtol=1e-12)

    def test_spectrum_peaks_at_the_peak_frequency(self) -> None:
        sample = canonical_sample(distance_mpc=50.0, phase=0.0)
        f = np.linspace(1000.0, 5000.0, 40001)

        loudest = f[np.argmax(np.abs(waveform(f, sample, EOS)))]
        f_p = sample.peak_frequency_hz

        self.assertLess(abs(loudest - f_p) / f_p, 1 / EOS.q_factor)

    def test_invalid_inputs(self) -> None:
        with self.assertRaises(ValueError):
            waveform([0.0], canonical_sample(), EOS)
        with self.assertRaises(ValueError):
            waveform([100.0], canonical_sample(distance_mpc=0.0), EOS)


class AntennaTest(unittest.TestCase):
    def test_overhead_face_on_source_has_unit_response(self) -> None:
        self.assertAlmostEqual(float(antenna_response(0.0, 0.0, 0.0, 0.0)), 1.0)

    def test_response_is_bounded(self) -> None:
        rng = np.random.default_rng(5)
        angles = rng.uniform(0, 2 * np.pi, size=(4, 1000))

        response = antenna_response(*angles)

        self.assertTrue(np.all(response >= 0))
        self.assertTrue(np.all(response <= 1 + 1e-12))


class SamplePopulationTest(unittest.TestCase):
    def test_same_seed_same_samples(self) -> None:
        model = PopulationModel()

        first = sample_population(model, 50, seed=42)
        second = sample_population(model, 50, seed=42)
        other = sample_population(model, 50, seed=42, realization=1)

        self.assertEqual(first, second)
        self.assertNotEqual(first, other)

    def test_prefix_is_independent_of_count(self) -> None:
        model = PopulationModel()

        short = sample_population(model, 10, seed=3)
        long = sample_population(model, 40, seed=3)

        self.assertEqual(short, long[:10])

    def test_sample_ranges(self) -> None:
        samples = sample_population(PopulationModel(), 2000, seed=9)

        for sample in samples:
            self.assertGreater(sample.distance_mpc, 0.0)
            self.assertLessEqual(sample.distance_mpc, 1000.0)
            self.assertTrue(0 <= sample.phase < 2 * math.pi)
            self.assertTrue(0 <= sample.theta <= math.pi)
            self.assertEqual(sample.excluded, sample.total_mass > 3.45)

    def test_mean_mass(self) -> None:
        samples = sample_population(PopulationModel(), 200_000, seed=1)
        masses = np.array([sample.m1 for sample in samples])

        self.assertAlmostEqual(float(masses.mean()), 1.33, delta=0.001)

    def test_excluded_fraction_matches_normal_sum(self) -> None:
        model = PopulationModel(mass_spread=0.09, mass_spread_is_variance=True)
        samples = sample_population(model, 100_000, seed=2)

        excluded = np.mean([sample.excluded for sample in samples])
        expected = norm.sf((3.45 - 2 * 1.33) / (0.3 * math.sqrt(2)))

        self.assertAlmostEqual(expected, 0.0313, delta=0.0005)
        self.assertAlmostEqual(float(excluded), expected, delta=0.003)


class SnrTest(unittest.TestCase):
    def test_linear_in_inverse_noise(self) -> None:
        sample = canonical_sample(distance_mpc=200.0)

        once = snr(sample, flat_noise(1e-48))
        doubled = snr(sample, flat_noise(2e-48))

        self.assertTrue(math.isclose(doubled, once / 2, rel_tol=1e-12))

    def test_quadratic_in_inverse_distance(self) -> None:
        near = snr(canonical_sample(distance_mpc=100.0), flat_noise())
        far = snr(canonical_sample(distance_mpc=200.0), flat_noise())

        self.assertTrue(math.isclose(far, near / 4, rel_tol=1e-12))

    def test_matches_closed_form_integral(self) -> None:
        sample = canonical_sample(distance_mpc=50.0, phase=0.7)
        level = 1e-48

        def integrand(f: float) -> float:
            return float(np.abs(waveform(f, sample, EOS)) ** 2 / level)

        expected, _ = quad(
            integrand,
            1000.0,
            4000.0,
            points=[sample.peak_frequency_hz],
            epsabs=0,
            epsrel=1e-11,
            limit=200,
        )
        computed = snr(
            sample, flat_noise(level), response="unity", band_points=30001
        )

        self.assertTrue(math.isclose(computed, expected, rel_tol=1e-6))

    def test_matched_filter_mode(self) -> None:
        sample = canonical_sample(distance_mpc=300.0)

        literal = snr(sample, flat_noise())
        matched = snr(sample, flat_noise(), matched_filter=True)

        self.assertTrue(math.isclose(matched, math.sqrt(4 * literal), rel_tol=1e-12))

    def test_band_outside_curve_is_rejected(self) -> None:
        noise = Spectrum(np.array([10.0, 2000.0]), np.array([1e-48, 1e-48]))
        with self.assertRaises(ConfigError):
            snr(canonical_sample(), noise)


class RunStudyTest(unittest.TestCase):
    model = PopulationModel(samples=200, realizations=8)
    options = {"band_points": 301}

    def test_deterministic_across_worker_counts(self) -> None:
        serial = run_study(self.model, EOS, flat_noise(), 42, workers=1, **self.options)
        pooled = run_study(self.model, EOS, flat_noise(), 42, workers=4, **self.options)

        assert_array_equal(serial.loudest_snr, pooled.loudest_snr)
        assert_array_equal(serial.histogram_counts, pooled.histogram_counts)

    def test_quieter_detector_never_loses_events(self) -> None:
        noisy = run_study(self.model, EOS, flat_noise(1e-48), 7, **self.options)
        quiet = run_study(self.model, EOS, flat_noise(1e-49), 7, **self.options)

        assert_allclose(quiet.loudest_snr, 10 * noisy.loudest_snr, rtol=1e-12)
        self.assertGreaterEqual(quiet.detection_fraction, noisy.detection_fraction)

    def test_overwhelming_noise_detects_nothing(self) -> None:
        result = run_study(self.model, EOS, flat_noise(1.0), 7, **self.options)

        self.assertEqual(result.detection_fraction, 0.0)
        self.assertEqual(int(result.histogram_counts.sum()), self.model.realizations)

    def test_excluded_binaries_are_never_ranked(self) -> None:
        model = PopulationModel(samples=50, realizations=3, cutoff_mass=1.8)

        result = run_study(model, EOS, flat_noise(), 5, **self.options)

        assert_array_equal(result.loudest_snr, 0.0)
        assert_array_equal(result.excluded_counts, 50)
        self.assertFalse(result.detected.any())

    def test_expander_curves_rank_in_order(self) -> None:
        cfg = DetectorConfig(
            wavelength=1.55e-6,
            power=8.0e6,
            arm_length=20000.0,
            se_length=56.0,
            mass=200.0,
            t_itm=0.07,
            t_se=0.35,
        )
        gamma = derive_rates(cfg, 0.0).gamma
        frequencies = np.logspace(2, 4, 400)
        results = []
        for fraction in (0.0, 0.5, 0.9):
            values = strain_psd_twomode(cfg, fraction * gamma, 2 * np.pi * frequencies)
            noise = Spectrum(frequencies, values)
            results.append(run_study(self.model, EOS, noise, 3, **self.options))

        for lower, higher in zip(results, results[1:], strict=False):
            self.assertTrue(np.all(higher.loudest_snr >= lower.loudest_snr))
            self.assertGreaterEqual(
                higher.detection_fraction, lower.detection_fraction
            )


class DetectabilityStudyTest(unittest.TestCase):
    """Semiclassical 4 MW detector, readout loss 1 - eta, gain tuned over 1-4 kHz."""

    grid = FrequencyGrid(f_min=500.0, f_max=5000.0, n_points=400)

    def curve(self, cfg: DetectorConfig) -> Spectrum:
        frequencies = self.grid.frequencies()
        readout = ReadoutConfig.from_detector(cfg)
        values = strain_psd_full(cfg, readout, 2 * np.pi * frequencies)
        return Spectrum(frequencies, values)

    def expanded(self, cfg: DetectorConfig, readout_loss: float) -> DetectorConfig:
        lossy = cfg.model_copy(update={"eta": 1 - readout_loss})
        best = optimize_gain(lossy, ReadoutConfig.from_detector(lossy), grid=self.grid)
        self.assertGreater(best.improvement_db, 0.0)
        return with_gain(lossy, best.fraction)

    def detection(self, cfg: DetectorConfig) -> float:
        model = PopulationModel(response="unity")
        result = run_study(model, EOS, self.curve(cfg), 42, band_points=601, workers=4)
        return result.detection_fraction

    def test_expander_lifts_post_merger_detection(self) -> None:
        cfg = parse_config("preset = gwo_semiclassical\n").detector
        self.assertEqual(cfg.q_ext, 0.0)

        baseline = self.detection(cfg)
        three_percent = self.detection(self.expanded(cfg, 0.03))
        half_percent = self.detection(self.expanded(cfg, 0.005))

        self.assertGreaterEqual(baseline, 0.02)
        self.assertLessEqual(baseline, 0.25)
        self.assertLess(baseline, three_percent)
        self.assertLess(three_percent, half_percent)
        self.assertGreater(half_percent, 0.9)


class EventRateTest(unittest.TestCase):
    def test_expected_events(self) -> None:
        expected = 1.54 * 4 / 3 * math.pi * 1000.0**3 * 1e-6

        self.assertAlmostEqual(
            expected_events_per_year(PopulationModel()), expected, places=6
        )


if __name__ == "__main__":
    unittest.main()
