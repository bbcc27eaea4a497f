"""Serial threshold partial pivoting over a trapezoidal supernode.

The kernel selects up to p pivots from the symmetric top block, testing
each candidate column against the entries of the whole column (including
the rows below the diagonal block) and delaying columns that fail.  A
candidate that has uneliminated columns to its left is first tried as a
2x2 pivot paired with the best of them; accepted pivots are permuted to
the front and a right-looking update keeps every remaining column current.
The loop sweeps the remaining candidates until a full sweep accepts
nothing; whatever is left is reported as delayed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    FrontBuffer,
    GrowthTrace,
    PartialFactorization,
    PivotBlock,
    PivotParams,
    SupernodeMatrix,
    det2x2_scaled,
    det_guard_ok,
)


@dataclass
class TppStats:
    """Bookkeeping for one factorization run.

    ``rejected_2x2`` counts candidate pairs that failed the 2x2 test;
    ``rejected_1x1`` counts failed threshold tests on single columns
    (a column with no available partner is only ever tested this way).
    """

    sweeps: int = 0
    rejected_2x2: int = 0
    rejected_1x1: int = 0
    zero_pivots: int = 0


@dataclass
class TppResult:
    factorization: PartialFactorization
    growth: GrowthTrace
    stats: TppStats
    front: FrontBuffer = field(repr=False, default=None)


def test_1x1(pivot_value: float, maxm: float, u: float) -> bool:
    """Threshold acceptance for a 1x1 pivot: |a(q,q)| >= u * max_i |a(i,q)|."""
    return abs(pivot_value) >= u * maxm


def test_2x2(a_tt: float, a_tm: float, a_mm: float, maxm: float, maxt: float,
             params: PivotParams) -> bool:
    """Acceptance test for the 2x2 candidate [[a_tt, a_tm], [a_tm, a_mm]].

    ``maxt``/``maxm`` are the column maxima of columns t and m excluding
    rows t and m.  The block is rejected when all entries fall below the
    drop tolerance or when the scaled determinant fails the cancellation
    guard; it is accepted when the off-pivot columns are negligible or when
    |D^-1| (maxt, maxm)^T <= (1/u, 1/u)^T componentwise, evaluated with the
    scaled determinant.
    """
    scaled = det2x2_scaled(a_tt, a_tm, a_mm, params.small)
    if scaled is None:
        return False
    detscale, detpiv0, detpiv1, detpiv = scaled
    if not det_guard_ok(detpiv, detpiv0, detpiv1, params.small):
        return False
    if max(maxm, maxt) < params.small:
        return True
    absdet = abs(detpiv)
    comp_t = (abs(a_mm) * detscale * maxt + abs(a_tm) * detscale * maxm) / absdet
    comp_m = (abs(a_tm) * detscale * maxt + abs(a_tt) * detscale * maxm) / absdet
    return comp_t <= params.inv_u and comp_m <= params.inv_u


def run_pivot_loop(front: FrontBuffer, params: PivotParams,
                   on_pivot=None) -> TppStats:
    """Drive the threshold-pivoting loop over a working front.

    Sweeps candidate positions m = nelim..p-1; each sweep restarts after an
    acceptance changed the trailing values.  ``on_pivot(front, block)`` is
    invoked after every accepted pivot (the front is already updated).
    Terminates when a full sweep accepts nothing.
    """
    stats = TppStats()
    p = front.p
    while front.nelim < p:
        stats.sweeps += 1
        progress = False
        m = front.nelim
        while m < p:
            e = front.nelim
            # Zero-column special case: the whole active column is negligible.
            if front.col_abs_max(m, lo=e) < params.small:
                front.swap_columns(m, e)
                blk = front.apply_zero(e)
                stats.zero_pivots += 1
                progress = True
                if on_pivot is not None:
                    on_pivot(front, blk)
                m += 1
                continue
            if m > e:
                # Pair with the largest entry of row m among columns e..m-1.
                t = front.row_abs_argmax(m, e)
                maxt = front.col_abs_max(t, lo=e, exclude=(t, m))
                maxm = front.col_abs_max(m, lo=e, exclude=(t, m))
                a_tt = front.sym_entry(t, t)
                a_tm = front.sym_entry(m, t)
                a_mm = front.sym_entry(m, m)
                if test_2x2(a_tt, a_tm, a_mm, maxm, maxt, params):
                    front.swap_columns(t, e)
                    front.swap_columns(m, e + 1)
                    blk = front.apply_2x2(e, params)
                    progress = True
                    if on_pivot is not None:
                        on_pivot(front, blk)
                    m += 1
                    continue
                stats.rejected_2x2 += 1
            maxm = front.col_abs_max(m, lo=e, exclude=(m,))
            if test_1x1(front.sym_entry(m, m), maxm, params.u):
                front.swap_columns(m, e)
                blk = front.apply_1x1(e)
                progress = True
                if on_pivot is not None:
                    on_pivot(front, blk)
                m += 1
                continue
            stats.rejected_1x1 += 1
            m += 1
        if not progress:
            break
    return stats


class GrowthRecorder:
    """Accumulates the growth sequence mu_q during a pivot loop; a 2x2 pivot
    duplicates the intermediate entry so mu is indexed by eliminations."""

    def __init__(self, front: FrontBuffer, include_below: bool = True):
        self.include_below = include_below
        self.mu = [front.active_abs_max(include_below)]

    def __call__(self, front: FrontBuffer, blk: PivotBlock) -> None:
        v = front.active_abs_max(self.include_below)
        for _ in range(blk.size):
            self.mu.append(v)

    def trace(self, pivots: list[PivotBlock]) -> GrowthTrace:
        return GrowthTrace(np.asarray(self.mu), list(pivots))


def build_factorization(front: FrontBuffer, n: int,
                        below_l: np.ndarray | None = None) -> PartialFactorization:
    """Assemble a PartialFactorization from a finished front.

    ``below_l`` supplies the below-diagonal L rows when they were computed
    outside the front (compressed/restricted replays); by default the
    front's own below-rows are used.
    """
    ne = front.nelim
    top = np.tril(front.w[: front.p, :ne], -1)
    np.fill_diagonal(top, 1.0)
    # The within-block coupling of a 2x2 pivot belongs to D, not L.
    j = 0
    for blk in front.pivots:
        if blk.kind == "2x2":
            top[j + 1, j] = 0.0
        j += blk.size
    if below_l is None:
        below_l = front.w[front.p :, :ne]
    l = np.vstack([top, below_l[:, :ne]])
    return PartialFactorization(
        n=n,
        p=front.p,
        perm=front.perm.copy(),
        pivots=list(front.pivots),
        nelim=ne,
        L=l,
        delayed=[int(c) for c in front.perm[ne:]],
    )


def factor_tpp(matrix: SupernodeMatrix, params: PivotParams | None = None) -> TppResult:
    """Threshold partial pivoting on the full supernode.

    Column scans cover every row of the supernode, so the resulting L
    entries are bounded by 1/u and the per-step growth of the working
    matrix by (1 + 1/u) for 1x1 pivots and (1 + 2/u) for 2x2 pivots.
    """
    params = params or PivotParams()
    front = FrontBuffer(matrix.a11, matrix.a21)
    growth = GrowthRecorder(front)
    stats = run_pivot_loop(front, params, on_pivot=growth)
    fact = build_factorization(front, matrix.n)
    return TppResult(fact, growth.trace(front.pivots), stats, front)
