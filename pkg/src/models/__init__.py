from .base import StrictModel
from .detector import DetectorConfig
from .population import EosFit, PopulationModel
from .readout import FilterCavity, ReadoutConfig
from .run import FrequencyGrid, RunConfig
from .spectrum import Spectrum

__all__ = [
    "DetectorConfig",
    "EosFit",
    "FilterCavity",
    "FrequencyGrid",
    "PopulationModel",
    "ReadoutConfig",
    "RunConfig",
    "Spectrum",
    "StrictModel",
]
