"""Interacting particle systems on locally finite graphs via Poisson graphical construction."""

from .graph import Graph, Window, two_step_graph, neighborhood, two_neighborhood, graph_distance
from .saw import (enumerate_saws, enumerate_remnant_saws, is_remnant_saw,
                  reduce_path_to_remnant_saw, trail_table, TrailTable)
from .graphical import ClockRealization, sample_clocks, affects, cluster, generations
from .ips import make_kernel, run, mu_step, apply_generator, Cylinder

__version__ = "0.1.0"
