"""Pivoting strategies for dense trapezoidal supernodes.

Four strategies over the same working kernel (threshold partial
pivoting, strict and relaxed compressed threshold pivoting, restricted
pivoting), plus a closed-form communication cost model, a deterministic
logical-processor simulator with exact counters, and a benchmark harness
with iterative refinement and machine-readable reports.
"""

from .bench import (
    GeneratorSpec,
    SolveReport,
    backward_error,
    factor_system,
    generate,
    report,
    solve_with_refinement,
)
from .comm_model import CostTriple, reduction_costs, scheme_costs, tpp_ops
from .compressed import (
    CompressedMatrix,
    build_relaxed,
    build_strict,
    check_dominance,
    factor_compressed,
    update_strict_c,
)
from .core import (
    ColumnReplay,
    FrontBuffer,
    GrowthTrace,
    PartialFactorization,
    PivotBlock,
    PivotError,
    PivotParams,
    SupernodeMatrix,
    apply_1x1_pivot,
    apply_2x2_pivot,
    column_max_below,
    form_schur,
    permute_symmetric,
)
from .parsim import CommCounters, Partition, merge_relaxed, merge_strict, simulate
from .restricted import factor_restricted
from .tpp import factor_tpp, test_1x1, test_2x2

__version__ = "0.1.0"

__all__ = [
    "ColumnReplay",
    "CommCounters",
    "CompressedMatrix",
    "CostTriple",
    "FrontBuffer",
    "GeneratorSpec",
    "GrowthTrace",
    "PartialFactorization",
    "Partition",
    "PivotBlock",
    "PivotError",
    "PivotParams",
    "SolveReport",
    "SupernodeMatrix",
    "apply_1x1_pivot",
    "apply_2x2_pivot",
    "backward_error",
    "build_relaxed",
    "build_strict",
    "check_dominance",
    "column_max_below",
    "factor_compressed",
    "factor_restricted",
    "factor_system",
    "factor_tpp",
    "form_schur",
    "generate",
    "merge_relaxed",
    "merge_strict",
    "permute_symmetric",
    "reduction_costs",
    "report",
    "scheme_costs",
    "simulate",
    "solve_with_refinement",
    "test_1x1",
    "test_2x2",
    "tpp_ops",
    "update_strict_c",
]
