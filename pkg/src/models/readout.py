import math
from typing import Literal

from pydantic import Field

from .base import StrictModel
from .detector import DetectorConfig


class FilterCavity(StrictModel):
    gamma: float = Field(gt=0)
    detuning: float
    placement: Literal["input", "output"]


class ReadoutConfig(StrictModel):
    zeta: float = math.pi / 2
    eta: float = Field(default=1.0, gt=0, le=1)
    q_ext: float = Field(default=0.0, ge=0)
    phi_ext: float = 0.0
    filters: list[FilterCavity] = Field(default_factory=list)

    @classmethod
    def from_detector(
        cls, cfg: DetectorConfig, filters: list[FilterCavity] | None = None
    ) -> "ReadoutConfig":
        return cls(
            zeta=cfg.zeta,
            eta=cfg.eta,
            q_ext=cfg.q_ext,
            phi_ext=cfg.phi_ext,
            filters=filters or [],
        )
