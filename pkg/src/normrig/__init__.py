"""Witness-set construction and placement rigidity checks for
two-dimensional normed planes.

The package builds finite point sets whose unit-distance graph pins a target
distance down, and verifies that pinning numerically: enumeration of every
placement branch at small scale, randomized falsification at larger scale.
Hot numeric kernels live in a compiled extension (``normrig._core``) with a
pure-Python fallback selected at import; ``normrig.BACKEND`` names the one
in use.
"""

from normrig._backend import BACKEND
from normrig.norms import (Norm2, NormError, ScanReport, StarReport,
                           blend_norm, check_star_condition, construct_norm,
                           p_norm, polygonal_norm, strict_convexity_scan,
                           strictify)
from normrig.spheres import (ConvergenceError, InfeasibleRadiiError,
                             OrientedFrame, find_second_pair, h_map,
                             make_frame, pair_sum_gap, scan_star_condition,
                             side_of_line, sphere_intersect)
from normrig.verify import (BudgetError, EquilateralResult, Placement,
                            PlanError, VerifyReport, approx_gap_check,
                            check_non_collapse, enumerate_placements,
                            equilateral_search, falsify)
from normrig.witness import (FIGURE5_GRAPH, BuildError, ConfigGraph,
                             Figure5Error, InvariantError, WitnessSet,
                             approx_set, base_pair, build_rational,
                             dedup_and_merge, divide_set, double_set,
                             figure5_config, multiply_set)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "Norm2", "NormError", "ScanReport", "StarReport", "p_norm",
    "polygonal_norm", "blend_norm", "strictify", "construct_norm",
    "strict_convexity_scan", "check_star_condition",
    "OrientedFrame", "make_frame", "side_of_line", "sphere_intersect",
    "h_map", "pair_sum_gap", "find_second_pair", "scan_star_condition",
    "InfeasibleRadiiError", "ConvergenceError",
    "WitnessSet", "ConfigGraph", "FIGURE5_GRAPH", "BuildError",
    "InvariantError", "Figure5Error", "base_pair", "double_set",
    "multiply_set", "divide_set", "build_rational", "approx_set",
    "figure5_config", "dedup_and_merge",
    "Placement", "VerifyReport", "PlanError", "BudgetError",
    "enumerate_placements", "falsify", "equilateral_search",
    "EquilateralResult", "check_non_collapse", "approx_gap_check",
]
