from .astro import run_study, sample_population
from .budget import benefit_map, decompose, optimize_gain
from .config import parse_config
from .exactcavity import strain_psd_exact
from .fullmodel import homodyne_psd, strain_psd_full
from .twomode import qcrb_psd, strain_psd_twomode
from .utils.tools import VERSION

__version__ = VERSION

__all__ = [
    "benefit_map",
    "decompose",
    "homodyne_psd",
    "optimize_gain",
    "parse_config",
    "qcrb_psd",
    "run_study",
    "sample_population",
    "strain_psd_exact",
    "strain_psd_full",
    "strain_psd_twomode",
]
