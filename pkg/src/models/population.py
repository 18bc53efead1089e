import math
from typing import Literal

from pydantic import Field, model_validator

from .base import StrictModel


class PopulationModel(StrictModel):
    mass_mean: float = Field(default=1.33, gt=0)
    mass_spread: float = Field(default=0.09, gt=0)
    mass_spread_is_variance: bool = False
    max_distance_mpc: float = Field(default=1000.0, gt=0)
    rate: float = Field(default=1.54, gt=0)
    samples: int = Field(default=1000, gt=0)
    realizations: int = Field(default=100, gt=0)
    cutoff_mass: float = Field(default=3.45, gt=0)
    snr_threshold: float = Field(default=5.0, gt=0)
    response: Literal["quadrupole", "unity"] = "quadrupole"

    @property
    def mass_sigma(self) -> float:
        if self.mass_spread_is_variance:
            return math.sqrt(self.mass_spread)
        return self.mass_spread

    @model_validator(mode="after")
    def _cutoff_above_typical_pair(self) -> "PopulationModel":
        if self.cutoff_mass <= 2 * self.mass_mean - 10 * self.mass_sigma:
            raise ValueError("cutoff_mass excludes essentially every binary")
        return self


class EosFit(StrictModel):
    q_factor: float = Field(default=23.3, gt=0)
    peak_amplitude: float = Field(default=5e-22, gt=0)
    radius_km: float = Field(default=14.42, gt=0)
    fit_a2: float = 5.503
    fit_a1: float = -0.5495
    fit_a0: float = 0.0157
    fp_scale_hz: float = Field(default=1.0, gt=0)
