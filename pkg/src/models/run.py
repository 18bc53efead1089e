from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import Field, model_validator

from .base import StrictModel
from .detector import DetectorConfig
from .population import EosFit, PopulationModel
from .readout import ReadoutConfig


class FrequencyGrid(StrictModel):
    f_min: float = Field(default=1.0, gt=0)
    f_max: float = Field(default=1.0e4, gt=0)
    n_points: int = Field(default=1000, ge=2)

    @model_validator(mode="after")
    def _ordered(self) -> "FrequencyGrid":
        if self.f_max <= self.f_min:
            raise ValueError("f_max must exceed f_min")
        return self

    def frequencies(self) -> np.ndarray:
        return np.logspace(np.log10(self.f_min), np.log10(self.f_max), self.n_points)

    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.frequencies()


class RunConfig(StrictModel):
    detector: DetectorConfig
    readout: ReadoutConfig
    population: PopulationModel = Field(default_factory=PopulationModel)
    eos: EosFit = Field(default_factory=EosFit)
    grid: FrequencyGrid = Field(default_factory=FrequencyGrid)
    preset: str | None = None
    model: Literal["twomode", "exact", "full"] = "full"
    chi: float = Field(default=0.0, ge=0)
    format: Literal["csv", "json"] = "csv"
    seed: int | None = Field(default=None, ge=0)
    asd: bool = False
    noise_curve: Path | None = None
    workers: int = Field(default=1, ge=1)
    band_min_hz: float = Field(default=1000.0, gt=0)
    band_max_hz: float = Field(default=4000.0, gt=0)
    band_points: int = Field(default=3001, ge=2)
    matched_filter: bool = False
    histogram_bins: int = Field(default=25, ge=1)
    loss_grid: list[float] = Field(
        default_factory=lambda: [0.0, 0.005, 0.01, 0.02, 0.03, 0.05, 0.1]
    )
    gain_grid: list[float] = Field(
        default_factory=lambda: [-0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99]
    )
    bandwidth_fractions: list[float] = Field(
        default_factory=lambda: [0.0, 0.5, 0.9, 0.99]
    )

    @model_validator(mode="after")
    def _band_ordered(self) -> "RunConfig":
        if self.band_max_hz <= self.band_min_hz:
            raise ValueError("band_max_hz must exceed band_min_hz")
        if any(not 0 <= loss <= 1 for loss in self.loss_grid):
            raise ValueError("loss_grid values must lie in [0, 1]")
        if not self.loss_grid or not self.gain_grid:
            raise ValueError("loss_grid and gain_grid must be non-empty")
        if any(not 0 <= fraction < 1 for fraction in self.bandwidth_fractions):
            raise ValueError("bandwidth_fractions must lie in [0, 1)")
        return self

    @property
    def band(self) -> tuple[float, float]:
        return self.band_min_hz, self.band_max_hz
