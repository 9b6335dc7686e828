"""Seeded matching of correlated power-law graphs by degree slices."""

from .generator import ModelParams, generate_instance
from .graph import Graph, from_edges, load_edge_list, save_edge_list
from .matchers import pld, run_algorithm
from .matching import Matching
from .slicing import PldParams

__all__ = ["Graph", "Matching", "ModelParams", "PldParams", "from_edges", "generate_instance",
           "load_edge_list", "pld", "run_algorithm", "save_edge_list"]
__version__ = "0.1.0"
