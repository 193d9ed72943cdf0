"""Two-weight testing toolkit for bilinear fractional integrals on atomic measures."""

__version__ = "0.1.0"

from .geometry import AxisCube, DyadicCube, all_shifts, covering_cube, standard_shift
from .measure import DiscreteMeasure, ExponentTuple, lp_norm, validate_exponents, weak_lq_norm
from .operators import OperatorParams, TruncationWindow, eval_dyadic, eval_kernel, eval_sparse
from .sparse import SparseFamily, build_sparse, verify_sparsity
from .testing import Instance, VerificationReport, testing_constants, verify_theorem

__all__ = [
    "AxisCube", "DyadicCube", "DiscreteMeasure", "ExponentTuple", "Instance", "OperatorParams",
    "SparseFamily", "TruncationWindow", "VerificationReport", "all_shifts", "build_sparse",
    "covering_cube", "eval_dyadic", "eval_kernel", "eval_sparse", "lp_norm", "standard_shift",
    "testing_constants", "validate_exponents", "verify_sparsity", "verify_theorem", "weak_lq_norm",
]
