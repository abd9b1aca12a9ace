"""Killing tensors on symmetric spaces: exact linear systems, Taylor series and flows."""
from .catalog import SymmetricSpaceModel, catalog_table, resolve
from .killing_system import (LinearSystem, Solution, SolutionReport, build_quadratic_system, build_rank1_system,
                             build_topslot_system, compare_rank1_topslot, indecomposability_report, membership,
                             solve)
from .tensor_core import BianchiTensor, SymPairTensor, SymTensorRankD

__all__ = [
    "SymmetricSpaceModel", "catalog_table", "resolve",
    "LinearSystem", "Solution", "SolutionReport", "build_quadratic_system", "build_rank1_system",
    "build_topslot_system", "compare_rank1_topslot", "indecomposability_report", "membership", "solve",
    "BianchiTensor", "SymPairTensor", "SymTensorRankD",
]
__version__ = "0.1.0"
