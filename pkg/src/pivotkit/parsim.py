"""Deterministic logical-processor simulation of the parallel pivoting
schemes, with exact operation / message / bandwidth counters.

The simulator executes the logical steps of each scheme (leaf construction
of the compressed matrix per processor, tree merges, the stacked or full
factorization, distribution of the factored block, application to the
locally owned rows) sequentially in a fixed order, so every run is
bit-reproducible and the factorization it returns matches the serial run
of the same strategy.  Per-processor partial column maxima fold to exactly
the global maximum (max is exact), so scans compute it directly.

Counters follow the accounting model of the communication analysis: they
charge each *realized* event with its model cost.  For a 2x2 pivot that is
the itemized 2(n-2i-1) scan + 18 test + 4(n-2i) apply +
(p-2i)(2n-p-2i+1) update operations; reductions cost log2(P) messages and
2(P-1)k words; a broadcast costs one message.  On matrices where every
candidate is accepted immediately as a 2x2 pivot these charges sum exactly
to the closed forms of :mod:`pivotkit.comm_model`.  Realized 1x1 and zero
pivots (which the closed-form model excludes) are charged the natural
one-column analogues: scan n-e-1, test 3 (abs, multiply, compare), apply
2(n-e), update (p-e)(2n-p-e+1)/2, and a zero pivot only its column scan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .comm_model import log2_exact
from .compressed import CompressedMatrix, build_relaxed, build_strict
from .core import (
    ColumnReplay,
    FrontBuffer,
    PartialFactorization,
    PivotParams,
    SupernodeMatrix,
)
from .tpp import build_factorization, run_pivot_loop

METHODS = ("tpp_A", "tpp_B", "strict", "relaxed", "restricted")


@dataclass(frozen=True)
class Partition:
    """P contiguous, disjoint, covering row ranges with sizes differing by
    at most one; P must be a power of two."""

    n_rows: int
    nblocks: int

    def __post_init__(self) -> None:
        log2_exact(self.nblocks)
        if self.n_rows < 0:
            raise ValueError("row count must be nonnegative")

    @property
    def blocks(self) -> list[tuple[int, int]]:
        P = self.nblocks
        return [(self.n_rows * b // P, self.n_rows * (b + 1) // P) for b in range(P)]


@dataclass
class CommCounters:
    """Abstract operation count, critical-path message count and words
    transferred.  A broadcast counts 1 message; a k-value tree reduction
    counts log2(P) messages and 2(P-1)k words."""

    ops: int = 0
    msgs: int = 0
    bw: int = 0

    def add_reduction(self, k: int, P: int) -> None:
        self.ops += (P - 1) * k
        self.msgs += log2_exact(P)
        self.bw += 2 * (P - 1) * k

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.ops, self.msgs, self.bw)


@dataclass
class SimResult:
    method: str
    P: int
    factorization: PartialFactorization
    counters: CommCounters
    compressed: CompressedMatrix | None = None
    stats: object = field(default=None, repr=False)


def merge_strict(c1: CompressedMatrix, c2: CompressedMatrix) -> CompressedMatrix:
    """Merge two strict compressed matrices built over disjoint row sets:
    elementwise maximum of the rows, union of the partition sets.  The
    result equals the strict construction over the combined rows exactly,
    so merging is associative and commutative."""
    if c1.mode != "strict" or c2.mode != "strict":
        raise ValueError("merge_strict needs two strict compressed matrices")
    if c1.p != c2.p:
        raise ValueError("column counts differ")
    rows = np.maximum(c1.rows, c2.rows)
    prov = tuple(tuple(sorted(a + b))
                 for a, b in zip(c1.provenance, c2.provenance))
    return CompressedMatrix(rows, "strict", prov)


def merge_relaxed(c1: CompressedMatrix, c2: CompressedMatrix) -> CompressedMatrix:
    """Tournament merge of two relaxed selections: stack the candidate rows
    (first argument's rows first) and rerun the column-flagging selection
    over the stack.  Each surviving row is one of the original rows; the
    per-column winner is maximal over the candidate stack."""
    if c1.mode != "relaxed" or c2.mode != "relaxed":
        raise ValueError("merge_relaxed needs two relaxed compressed matrices")
    if c1.p != c2.p:
        raise ValueError("column counts differ")
    p = c1.p
    cand = np.vstack([c1.rows, c2.rows]) if (c1.r or c2.r) else np.zeros((0, p))
    sources = [g[0] for g in c1.provenance] + [g[0] for g in c2.provenance]
    nb = cand.shape[0]
    flagged = np.zeros(nb, dtype=bool)
    picked: list[int] = []
    absrows = np.abs(cand)
    for j in range(p):
        if nb == 0 or flagged.all():
            break
        vals = np.where(flagged, -1.0, absrows[:, j])
        i = int(np.argmax(vals))
        flagged[i] = True
        picked.append(i)
    rows = cand[picked].copy() if picked else np.zeros((0, p))
    prov = tuple((sources[i],) for i in picked)
    return CompressedMatrix(rows, "relaxed", prov)


def tree_reduce(leaves: list[CompressedMatrix], merge) -> CompressedMatrix:
    """Pairwise binary-tree reduction (leaf count is a power of two)."""
    level = list(leaves)
    while len(level) > 1:
        level = [merge(level[i], level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


def _pivot_ops(s: int, e: int, n_model: int, p: int, kind: str) -> int:
    """Model operation charge for one realized pivot; ``e`` is the
    elimination count after the pivot."""
    if kind == "zero":
        return max(0, n_model - e)
    scan = s * (n_model - e - 1)
    test = 18 if s == 2 else 3
    apply = 2 * s * (n_model - e)
    update = s * ((p - e) * (2 * n_model - p - e + 1)) // 2
    return scan + test + apply + update


def simulate(method: str, matrix: SupernodeMatrix, P: int,
             params: PivotParams | None = None) -> SimResult:
    """Run one scheme on P logical processors.

    The factorization is numerically identical to the serial run of the
    same strategy (for relaxed compressed pivoting with P > 1 the merged C
    is its own deterministic P-indexed selection).  Counters are charged
    per the accounting model described in the module docstring.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    lg = log2_exact(P)
    params = params or PivotParams()
    n, p = matrix.n, matrix.p
    counters = CommCounters()

    if method in ("tpp_A", "tpp_B"):
        Partition(n if method == "tpp_A" else n - p, P)  # validate the split
        if method == "tpp_B":
            counters.msgs += 1
            counters.bw += (P - 1) * p * (p + 1) // 2
        front = FrontBuffer(matrix.a11, matrix.a21)

        def on_pivot(f, blk):
            s, e = blk.size, f.nelim
            counters.ops += _pivot_ops(s, e, n, p, blk.kind)
            if blk.kind == "zero":
                return
            counters.msgs += lg
            counters.bw += 2 * s * (P - 1)
            if method == "tpp_A":
                counters.msgs += 2
                counters.bw += s * P * (p - e) + (3 if s == 2 else 1)
            else:
                counters.ops += (P - 1) * _pivot_ops(s, e, p, p, blk.kind)

        stats = run_pivot_loop(front, params, on_pivot=on_pivot)
        fact = build_factorization(front, n)
        return SimResult(method, P, fact, counters, None, stats)

    if method == "restricted":
        front = FrontBuffer(matrix.a11)

        def on_pivot(f, blk):
            s, e = blk.size, f.nelim
            counters.ops += _pivot_ops(s, e, p, p, blk.kind)
            if blk.kind != "zero":
                counters.ops += (n - p) * s * (2 + (p - e))

        stats = run_pivot_loop(front, params, on_pivot=on_pivot)
        counters.msgs += 1
        counters.bw += (P - 1) * p * (p + 1) // 2
        below = ColumnReplay(matrix.a21, front.history).run()
        fact = build_factorization(front, n, below_l=below)
        return SimResult(method, P, fact, counters, None, stats)

    # strict / relaxed compressed pivoting
    part = Partition(n - p, P)
    builder = build_strict if method == "strict" else build_relaxed
    leaves = [builder(matrix.a21[lo:hi], row_offset=lo) for lo, hi in part.blocks]
    merger = merge_strict if method == "strict" else merge_relaxed
    merged = tree_reduce(leaves, merger)
    if method == "strict":
        counters.ops += (n - p) * (3 * p - 1)
        counters.add_reduction(p * p, P)
        counters.ops += p * (p + 1) // 2  # absolute-value copy of the top block
    else:
        counters.ops += (n - p) * (2 * p)
        counters.ops += (P - 1) * p
        counters.msgs += lg
        counters.bw += 2 * (P - 1) * p * p

    front = FrontBuffer(matrix.a11, merged.rows, abs_below=(method == "strict"))

    def on_pivot(f, blk):
        s, e = blk.size, f.nelim
        counters.ops += _pivot_ops(s, e, 2 * p, p, blk.kind)
        if blk.kind != "zero":
            counters.ops += (n - p) * s * (2 + (p - e))

    stats = run_pivot_loop(front, params, on_pivot=on_pivot)
    counters.msgs += 1
    counters.bw += (P - 1) * p * (p + 1) // 2
    below = ColumnReplay(matrix.a21, front.history).run()
    fact = build_factorization(front, n, below_l=below)
    return SimResult(method, P, fact, counters, merged, stats)
