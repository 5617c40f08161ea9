"""capdisk: paired spherical-cap / planar-disk point processes for NTN models.

Generates coupled binomial point processes on a spherical cap and a planar
disk, evaluates topology- and system-level metrics on both, and estimates
the relative error of the planar approximation to recommend planar vs
spherical modeling.
"""

__version__ = "0.1.0"

from capdisk.backend import active_backend
from capdisk.errors import ConfigError, DomainError
from capdisk.geom import EARTH, EarthConstants
from capdisk.metrics import ChannelModel, MetricId
from capdisk.pointgen import DeploymentParams, PairedDeployment, generate_pair
from capdisk.rng import RngSpec

__all__ = [
    "__version__",
    "active_backend",
    "ConfigError",
    "DomainError",
    "EARTH",
    "EarthConstants",
    "ChannelModel",
    "MetricId",
    "DeploymentParams",
    "PairedDeployment",
    "generate_pair",
    "RngSpec",
]
