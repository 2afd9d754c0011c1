"""Real-time periodic data collection scheduling for multi-hop sensor networks."""

from .netmodel import Network, Node, PhIM, PrIM, RtsCts, RegionIndex
from .queries import Query
from .scenario import SimConfig, run_scenario

__all__ = ["Network", "Node", "PhIM", "PrIM", "RtsCts", "RegionIndex", "Query",
           "SimConfig", "run_scenario"]
__version__ = "0.1.0"
