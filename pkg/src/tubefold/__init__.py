"""Discrete dynamics of nonuniformly folded tubular origami.

The state of a zigzag is (theta, I). Folding maps advance it ring by ring,
their large-N limit is an integrable twist map whose frequency profile is
computed in :mod:`tubefold.integrable`, and :mod:`tubefold.analysis` studies
orbits of the finite-N maps.
"""
__version__ = "0.1.0"

from .errors import (ConfigError, DomainError, FiniteSolution, NotSymmetric,
                     ToleranceNotMet, TooShort)
from .geometry import (INFINITE, FoldParams, ZigzagState, alpha_beta, intersection_vertex,
                       local_frame, sphere_intersection, zigzag_vertices)
from .maps import (ModuleSpec, StepSpec, case_a, case_b, experiment1, experiment2,
                   experiment3, jacobian, jacobian_det, map_f, map_g, module_map)
from .integrable import (classify_integrability, frequency_profile, genfun_quadrature,
                         genfun_symmetric, integrable_map, mean_curvature_tetrahedron,
                         total_xi, xi_f)
from .analysis import (attractor_scan, classify_twist, find_xi_extrema, find_xi_zeros,
                       iterate, phase_portrait, refine_fixed_point, rotation_number)
from .reconstruction import build_tube, export_obj, self_intersects
from .config import load_config

__all__ = [
    "ConfigError", "DomainError", "FiniteSolution", "NotSymmetric", "ToleranceNotMet",
    "TooShort", "INFINITE", "FoldParams", "ZigzagState", "alpha_beta",
    "intersection_vertex", "local_frame", "sphere_intersection", "zigzag_vertices",
    "ModuleSpec", "StepSpec", "case_a", "case_b", "experiment1", "experiment2",
    "experiment3", "jacobian", "jacobian_det", "map_f", "map_g", "module_map",
    "classify_integrability", "frequency_profile", "genfun_quadrature", "genfun_symmetric",
    "integrable_map", "mean_curvature_tetrahedron", "total_xi", "xi_f",
    "attractor_scan", "classify_twist", "find_xi_extrema", "find_xi_zeros", "iterate",
    "phase_portrait", "refine_fixed_point", "rotation_number", "build_tube", "export_obj",
    "self_intersects", "load_config",
]
