"""Overlapping community detection via stable coalitions of a graph game."""
from .graph import Graph, load_edge_list, read_edge_list
from .lse import LseConfig, run_lse
from .stability import CommunityStructure, is_stable, validate_structure
from .weights import WeightMatrix, compute_weights

__version__ = "0.1.0"

__all__ = ["CommunityStructure", "Graph", "LseConfig", "WeightMatrix", "compute_weights",
           "is_stable", "load_edge_list", "read_edge_list", "run_lse", "validate_structure"]
