"""
Social-recommendation-aided dynamic spectrum access.

Secondary users share what they sensed with their social neighbors and pick
channels either by solving a potential game (strong information) or by
reinforcement learning on perception tables (weak information).
"""

from .errors import ConfigurationError, ConsistencyError, EdgeListParseError, SocialDSAError
from .sim_config import Policy, SimConfig

__version__ = "1.0.0"

__all__ = [
    "ConfigurationError",
    "ConsistencyError",
    "EdgeListParseError",
    "SocialDSAError",
    "Policy",
    "SimConfig",
]
