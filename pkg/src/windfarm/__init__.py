"""Wind farm control as a cooperative multi-agent RL problem.

The package simulates a farm of yaw-controlled turbines in a slowly
rotating, spatially correlated wind field, lets groups of agents share
local wind measurements over a nearest-neighbour graph, and trains them
with an in-house PPO implementation.  Everything numerical is plain
numpy in float64; the only runtime dependencies beyond that are yaml
config parsing and the websocket streaming server.
"""

__version__ = "0.1.0"

from .configio import ConfigError

__all__ = ["ConfigError", "__version__"]
