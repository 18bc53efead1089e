import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c, hbar
from scipy.optimize import brentq

from .errors import ConfigError
from .models import DetectorConfig

logger = logging.getLogger(__name__)

# Transfer-matrix spectra refer displacement to one arm cavity (x = h L / 2),
# the two-mode Hamiltonian couples x = h L.
SINGLE_ARM_STRAIN_FACTOR = 4.0


@dataclass(frozen=True)
class DerivedRates:
    omega0: float
    omega_s: float
    gamma: float
    coupling: float
    chi: float
    gamma_baseline: float
    gamma_q: float
    above_threshold: bool
    strain_floor: float

    @property
    def expansion_ratio(self) -> float:
        return self.gamma_q / self.gamma_baseline


@dataclass(frozen=True)
class TwoModeResponse:
    noise_coeff: np.ndarray
    signal_coeff: np.ndarray
    se_noise_coeff: np.ndarray
    se_signal_coeff: np.ndarray
    arm_coeff: np.ndarray


def chi_from_fraction(cfg: DetectorConfig, fraction: float) -> float:
    return fraction * _se_rate(cfg)


def derive_rates(cfg: DetectorConfig, chi: float) -> DerivedRates:
    if chi < 0:
        raise ConfigError(f"parametric gain must be non-negative, got {chi}", key="chi")
    if cfg.t_itm == 0:
        raise ConfigError("the two-mode model needs t_itm > 0", key="t_itm")

    omega_s = c * math.sqrt(cfg.t_itm / (4 * cfg.se_length * cfg.arm_length))
    gamma = _se_rate(cfg)
    above_threshold = chi >= gamma
    if above_threshold:
        logger.debug("gain %.6g rad/s reaches threshold %.6g rad/s", chi, gamma)
        gamma_q = math.inf
    else:
        gamma_q = omega_s**2 / (gamma - chi)

    return DerivedRates(
        omega0=cfg.omega0,
        omega_s=omega_s,
        gamma=gamma,
        coupling=math.sqrt(2 * cfg.power * cfg.arm_length * cfg.omega0 / (hbar * c)),
        chi=chi,
        gamma_baseline=omega_s**2 / gamma,
        gamma_q=gamma_q,
        above_threshold=above_threshold,
        strain_floor=_shot_scale(cfg) * omega_s**2 / gamma,
    )


def io_twomode(cfg: DetectorConfig, chi: float, omega) -> TwoModeResponse:
    rates = derive_rates(cfg, chi)
    omega = _check_omega(omega)
    gamma, omega_s, G = rates.gamma, rates.omega_s, rates.coupling
    detune = omega**2 - omega_s**2

    den = (gamma + chi) * omega - 1j * detune
    with np.errstate(divide="ignore", invalid="ignore"):
        arm_coeff = (
            1j
            * math.sqrt(2 * gamma)
            * omega_s
            / ((gamma - chi) * omega - 1j * detune)
        )
    return TwoModeResponse(
        noise_coeff=((gamma - chi) * omega + 1j * detune) / den,
        signal_coeff=2j * G * math.sqrt(gamma) * omega_s / den,
        se_noise_coeff=math.sqrt(2 * gamma) * omega / den,
        se_signal_coeff=1j * G * omega_s / den,
        arm_coeff=arm_coeff,
    )


def strain_psd_twomode(cfg: DetectorConfig, chi: float, omega) -> np.ndarray:
    rates = derive_rates(cfg, chi)
    omega = _check_omega(omega)
    return (
        _shot_scale(cfg)
        * _response_denominator(rates, omega)
        / (rates.gamma * rates.omega_s**2)
    )


def qcrb_psd(cfg: DetectorConfig, chi: float, omega) -> np.ndarray:
    rates = derive_rates(cfg, chi)
    omega = _check_omega(omega)
    with np.errstate(divide="ignore"):
        s_aa = 2 * rates.gamma * rates.omega_s**2 / _response_denominator(rates, omega)
    return hbar * c / (4 * cfg.omega0 * cfg.arm_length * cfg.power) / s_aa


def half_power_bandwidth(cfg: DetectorConfig, chi: float) -> float:
    """Angular frequency where S_h climbs to twice its low-frequency value."""
    rates = derive_rates(cfg, chi)
    omega_s = rates.omega_s
    damping = (rates.gamma - chi) / omega_s

    def excess(x: float) -> float:
        return (x**2 - 1) ** 2 + damping**2 * x**2 - 2

    return omega_s * brentq(excess, 0.0, 2.0, xtol=1e-14, rtol=1e-14)


def _se_rate(cfg: DetectorConfig) -> float:
    if cfg.t_se == 0:
        raise ConfigError("the two-mode model needs t_se > 0", key="t_se")
    return c * cfg.t_se / (4 * cfg.se_length)


def _shot_scale(cfg: DetectorConfig) -> float:
    return hbar * c / (8 * cfg.omega0 * cfg.arm_length * cfg.power)


def _response_denominator(rates: DerivedRates, omega: np.ndarray) -> np.ndarray:
    damping = rates.gamma - rates.chi
    return (omega**2 - rates.omega_s**2) ** 2 + damping**2 * omega**2


def _check_omega(omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("sideband frequencies must be non-negative")
    return omega
