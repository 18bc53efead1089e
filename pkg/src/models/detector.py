import math

from pydantic import Field
from scipy.constants import c, hbar

from .base import StrictModel


class DetectorConfig(StrictModel):
    """Optical and mechanical parameters of the effective two-cavity detector.

    ``power`` is the effective intracavity power P_c = 2 P_arm. Angles are in
    radians, ``arm_detuning`` in rad/s, everything else in SI units.
    """

    wavelength: float = Field(gt=0)
    power: float = Field(gt=0)
    arm_length: float = Field(gt=0)
    se_length: float = Field(gt=0)
    mass: float = Field(gt=0)
    t_itm: float = Field(ge=0, le=1)
    t_se: float = Field(ge=0, le=1)
    t_etm: float = Field(default=0.0, ge=0, le=1)
    se_loss: float = Field(default=0.0, ge=0, le=1)
    eta: float = Field(default=1.0, ge=0, le=1)
    q_ext: float = Field(default=0.0, ge=0)
    phi_ext: float = 0.0
    q: float = 0.0
    theta: float = 0.0
    phi_itm: float = 0.0
    phi_sem: float = math.pi / 2
    arm_detuning: float = 0.0
    zeta: float = math.pi / 2
    carrier_angle: float = 0.0

    @property
    def omega0(self) -> float:
        return 2 * math.pi * c / self.wavelength

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def tau_arm(self) -> float:
        return self.arm_length / c

    @property
    def tau_se(self) -> float:
        return self.se_length / c

    @property
    def se_phase(self) -> float:
        """Total single-pass quadrature rotation of the SE cavity."""
        return self.phi_itm + self.phi_sem

    @property
    def photon_flux(self) -> float:
        return self.power / (hbar * self.omega0)
