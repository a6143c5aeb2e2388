"""The sawlab package."""
from importlib import metadata

from sawlab.config import RunConfig, load_config
from sawlab.lattice import LatticeSpec, lattice_from_string, strip_domain, zd_nearest, zd_spread_out
from sawlab.powerseries import SeriesTrunc
from sawlab.report import CheckReport
from sawlab.walks import count_bridges, count_half_space, count_polygons, count_walks

__all__ = [
    "CheckReport",
    "LatticeSpec",
    "RunConfig",
    "SeriesTrunc",
    "count_bridges",
    "count_half_space",
    "count_polygons",
    "count_walks",
    "lattice_from_string",
    "load_config",
    "strip_domain",
    "zd_nearest",
    "zd_spread_out",
]

_DISTRIBUTION_METADATA = metadata.metadata("sawlab")

__author__ = _DISTRIBUTION_METADATA["Author"]
__email__ = _DISTRIBUTION_METADATA["Author-email"]
__version__ = _DISTRIBUTION_METADATA["Version"]
