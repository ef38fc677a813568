"""Max-min secrecy-rate optimization for surface-assisted two-way networks.

Library layout: geometry (node placement), channel (fading draws and
effective cascaded channels), rates (all rate math), convex_kernel
(barrier solvers), phase_opt (successive convex phase refinement),
power_opt (fractional-programming power control), ao (the alternating
algorithm), baselines (reference schemes and exhaustive searches),
experiments (Monte Carlo runner), cli (batch front end).
"""

__version__ = "0.1.0"

from .channel import ChannelSet, EffectiveChannels, SystemParams  # noqa: F401
from .geometry import (Geometry, NodeId, ScenarioConfig,  # noqa: F401
                       default_scenario, load_scenario, place_nodes)
