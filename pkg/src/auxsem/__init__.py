"""Identification of linear structural equation models on mixed graphs."""

__version__ = "0.1.0"

from .augment import AugmentedGraph, KnownEdges, augment, aux_covariance, parse_known
from .constraints import Constraint, derive_constraints, evaluate_constraints
from .graph import BidirectedEdge, DirectedEdge, GraphError, MixedGraph, parse_graph, serialize_graph
from .identify import (EdgeSet, IdentificationCertificate, IdentificationResult, aux_is_fixpoint,
                       check_aux_is, check_quasi, check_simple_is, compare_methods, find_certificate,
                       ghtc_admissible, ghtc_fixpoint)
from .oracle import (CovMatrix, ModelInstance, implied_covariance, random_instance, solve_certificate,
                     standardize, verify_identification)
from .separation import d_separated, enumerate_unblocked_paths, find_path_system, half_trek_reachable
from .wright import CovExpr, wright_expression

__all__ = [
    "augment", "AugmentedGraph", "aux_covariance", "aux_is_fixpoint", "BidirectedEdge",
    "check_aux_is", "check_quasi", "check_simple_is", "compare_methods", "Constraint", "CovExpr",
    "CovMatrix", "d_separated", "derive_constraints", "DirectedEdge", "EdgeSet",
    "enumerate_unblocked_paths", "evaluate_constraints", "find_certificate", "find_path_system",
    "ghtc_admissible", "ghtc_fixpoint", "GraphError", "half_trek_reachable",
    "IdentificationCertificate", "IdentificationResult", "implied_covariance", "KnownEdges",
    "MixedGraph", "ModelInstance", "parse_graph", "parse_known", "random_instance",
    "serialize_graph", "solve_certificate", "standardize", "verify_identification",
    "wright_expression",
]
