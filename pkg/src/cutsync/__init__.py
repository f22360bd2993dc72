"""Cutset-projection synchronization analysis for Kuramoto oscillator networks."""

from .errors import CutsyncError
from .graph import Graph, build_graph, load_graph
from .projection import cutset_projection
from .sync_tests import OscillatorSystem, edge_flow, run_all

__all__ = [
    "CutsyncError",
    "Graph",
    "OscillatorSystem",
    "build_graph",
    "cutset_projection",
    "edge_flow",
    "load_graph",
    "run_all",
]
