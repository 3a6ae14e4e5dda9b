"""Cosine measure of positive spanning sets.

Four solvers are provided (basis enumeration, KKT enumeration, vertex
enumeration of the associated polytope and random LPs) together with
generators for families of known cosine measure, JSON corpus storage and
a benchmark harness.
"""
from .core import (DEFAULT_TOL, CosineResult, GramInfo, Tolerances, VectorSet, cone_violators,
                   cosine_along, gram_matrix, gram_vector, is_positive_spanning, normalize_set,
                   rank1_update_inverse)
from .errors import *  # noqa: F401,F403
from .generators import GeneratorSpec, TestCase, closed_form_cm, generate
from .polytope import Polytope, Vertex, build_polytope, enumerate_vertices, solve_lp, vertex_to_gram
from .solvers import METHODS, SolverConfig, SolverReport, solve

__version__ = "0.1.0"
