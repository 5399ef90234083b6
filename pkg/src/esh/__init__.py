"""Semidefinite upper bounds on the stability number of a graph."""
from .graphs import Graph, GraphFormatError, complement, erdos_renyi, paley, read_dimacs
from .hierarchy import (CESH, ESH, FORMULATIONS, SESH, BoundReport, HierarchyError, SearchConfig,
                        compare_formulations, compute_bound, compute_level, cutting_plane_search,
                        theta)
from .solver import SolverSettings, solve
from .stable_sets import alpha_bruteforce

__version__ = "0.1.0"
