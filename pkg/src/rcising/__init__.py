"""Random-current representation of the Ising model on finite graphs."""
from .currents import (Backbone, BondConfig, Current, ParityClass, ParityState, clusters, connected,
                       explore_backbone, fs_event, log_weight, sources, trace)
from .lattice import Graph, LatticeGraph, Region, build_lattice, canonical_edge_order, region_vertices

__version__ = "0.1.0"
