"""Exact phase-quadrature response of the ITM/SE-mirror chain with a single-pass
squeezer inside the SE cavity.

Sign conventions: every mirror reflects with ``-R`` on the side facing the
incoming field and ``+R`` on the far side, sidebands pick up ``exp(i*Omega*tau)``
per transit and the squeezer multiplies the phase quadrature by ``exp(-q)`` on
each pass.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar

from .models import DetectorConfig

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-12
SINGULAR_DENOMINATOR = 1e-12


@dataclass(frozen=True)
class ChainParams:
    R_i: float
    T_i: float
    R_s: float
    T_s: float
    q: float
    tau_arm: float
    tau_se: float
    wavenumber: float
    amplitude: float
    phi: float = math.pi / 2

    def __post_init__(self) -> None:
        for name, r, t in (("itm", self.R_i, self.T_i), ("se", self.R_s, self.T_s)):
            if abs(r - math.sqrt(1 - t**2)) > UNIT_TOLERANCE:
                raise ValueError(f"{name} mirror is not lossless: R={r}, T={t}")
        if self.tau_arm <= 0 or self.tau_se <= 0:
            raise ValueError("transit times must be positive")

    @classmethod
    def from_detector(cls, cfg: DetectorConfig) -> "ChainParams":
        return cls(
            R_i=math.sqrt(1 - cfg.t_itm),
            T_i=math.sqrt(cfg.t_itm),
            R_s=math.sqrt(1 - cfg.t_se),
            T_s=math.sqrt(cfg.t_se),
            q=cfg.q,
            tau_arm=cfg.tau_arm,
            tau_se=cfg.tau_se,
            wavenumber=cfg.wavenumber,
            amplitude=math.sqrt(2 * cfg.power / (hbar * cfg.omega0)),
            phi=cfg.se_phase,
        )


@dataclass(frozen=True)
class ExactTransfer:
    R_a: np.ndarray
    T_sig: np.ndarray
    unstable: np.ndarray


def exact_transfer(p: ChainParams, omega) -> ExactTransfer:
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("sideband frequencies must be non-negative")

    w = np.exp(1j * (p.phi + omega * p.tau_se))
    w2 = w**2
    u = np.exp(1j * omega * p.tau_arm)
    gain2 = math.exp(2 * p.q)
    arm_out = u**2 - p.R_i
    arm_in = 1 - u**2 * p.R_i

    den = gain2 * arm_in - p.R_s * w2 * arm_out
    singular = np.abs(den) < SINGULAR_DENOMINATOR * gain2
    # the conjugate quadrature sees exp(+q) per pass
    rho = np.abs(arm_out / arm_in)
    unstable = singular | (p.R_s * math.exp(2 * abs(p.q)) * rho >= 1)
    if np.any(unstable):
        logger.warning(
            "exact chain unstable at %d of %d frequencies",
            unstable.sum(),
            unstable.size,
        )

    with np.errstate(divide="ignore", invalid="ignore"):
        R_a = (w2 * arm_out - p.R_s * gain2 * arm_in) / den
        T_sig = (
            2j
            * p.wavenumber
            * p.amplitude
            * w
            * u
            * math.exp(p.q)
            * p.T_i
            * p.T_s
            / den
        )
    return ExactTransfer(R_a=R_a, T_sig=T_sig, unstable=unstable)


def displacement_psd_exact(p: ChainParams, omega) -> np.ndarray:
    transfer = exact_transfer(p, omega)
    return np.abs(transfer.R_a) ** 2 / np.abs(transfer.T_sig) ** 2


def strain_psd_exact(p: ChainParams, omega, arm_length: float) -> np.ndarray:
    return 4 * displacement_psd_exact(p, omega) / arm_length**2
