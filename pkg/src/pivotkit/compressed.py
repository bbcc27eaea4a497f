"""Strict and relaxed compressed threshold pivoting.

Instead of scanning the full below-diagonal block for every pivot test, a
small representative matrix C is built from it once.  The stacked matrix
(symmetric block over C) is then factorized with the ordinary threshold
loop, C rows entering the column scans exactly like below-diagonal rows,
and the accepted pivot sequence is finally applied to the real rows with
no further tests.

Strict mode partitions the rows by the column of their largest entry and
keeps columnwise maxima; its updates use absolute values throughout so
each C row always dominates the rows it represents (this is what makes the
method provably stable).  Relaxed mode keeps the p rows that hold the
initial column maxima and updates them like ordinary rows; it tracks the
true pivot sequence more closely but can be fooled by rows it left out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ColumnReplay,
    FrontBuffer,
    GrowthTrace,
    PivotBlock,
    PivotParams,
    SupernodeMatrix,
    eliminate_rows_1x1,
    eliminate_rows_2x2,
)
from .tpp import GrowthRecorder, TppStats, build_factorization, run_pivot_loop


@dataclass
class CompressedMatrix:
    """Representative matrix C with row provenance.

    strict: ``provenance[j]`` is the (possibly empty) sorted tuple of source
    row indices whose largest entry lies in column j; row j of C is their
    columnwise absolute maximum, so all entries are nonnegative and row j is
    zero iff its set is empty.

    relaxed: ``provenance[k]`` is the single source row flagged for column
    k; C rows are full signed copies of those rows.
    """

    rows: np.ndarray
    mode: str  # "strict" | "relaxed"
    provenance: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.mode not in ("strict", "relaxed"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def r(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]

    def source_rows(self) -> list[int]:
        return sorted(i for grp in self.provenance for i in grp)

    def row_map(self, a21: np.ndarray) -> np.ndarray:
        """Map each row of ``a21`` to the C row that stands for it.

        Strict rows map through their partition set.  Relaxed rows map to
        their own flagged copy when they have one, otherwise to the C row
        flagged for the column holding their largest entry (ties to the
        lowest column), that being the row that had to speak for them.
        """
        n_below = a21.shape[0]
        out = np.full(n_below, -1, dtype=int)
        for j, grp in enumerate(self.provenance):
            for i in grp:
                out[i] = j
        if self.mode == "relaxed" and self.r == self.p:
            absrows = np.abs(a21)
            for i in range(n_below):
                if out[i] < 0:
                    out[i] = _argmax_lowest(absrows[i])
        return out


def _argmax_lowest(values: np.ndarray) -> int:
    """Index of the largest value, ties resolved to the lowest index."""
    return int(np.argmax(values))


def build_strict(a21: np.ndarray, row_offset: int = 0) -> CompressedMatrix:
    """Strict compressed matrix of a below-diagonal block.

    Row j of C is the columnwise absolute maximum over the rows whose
    largest-magnitude entry (ties to the lowest column) lies in column j;
    columns with no such rows give zero rows.  ``row_offset`` shifts the
    recorded source-row indices, so partition leaves can carry global ones.
    """
    a21 = np.asarray(a21, dtype=np.float64)
    if a21.ndim != 2:
        raise ValueError("below-diagonal block must be 2-D")
    nb, p = a21.shape
    c = np.zeros((p, p))
    absrows = np.abs(a21)
    owner = np.argmax(absrows, axis=1) if nb else np.zeros(0, dtype=int)
    sets = []
    for j in range(p):
        rows_j = np.nonzero(owner == j)[0]
        if rows_j.size:
            c[j] = absrows[rows_j].max(axis=0)
        sets.append(tuple(int(i) + row_offset for i in rows_j))
    return CompressedMatrix(c, "strict", tuple(sets))


def build_relaxed(a21: np.ndarray, row_offset: int = 0) -> CompressedMatrix:
    """Relaxed compressed matrix: for each column in turn, flag the
    not-yet-flagged row holding the largest absolute entry of that column
    (first row wins ties) and append its full signed copy to C.  Stops
    early once every row is flagged, so C has min(p, rows) rows.
    """
    a21 = np.asarray(a21, dtype=np.float64)
    if a21.ndim != 2:
        raise ValueError("below-diagonal block must be 2-D")
    nb, p = a21.shape
    picked: list[int] = []
    vals = np.abs(a21)  # flagged rows get erased as they are picked
    for j in range(p):
        if len(picked) == nb:
            break
        i = _argmax_lowest(vals[:, j])
        vals[i, :] = -1.0
        picked.append(i)
    c = a21[picked].copy() if picked else np.zeros((0, p))
    return CompressedMatrix(c, "relaxed", tuple((i + row_offset,) for i in picked))


def update_strict_c(c: np.ndarray, pivot: PivotBlock, q: int,
                    araw: np.ndarray, small: float = 1e-20) -> np.ndarray:
    """Worst-case (absolute value) update of strict C rows for one pivot.

    ``q`` is the pivotal column position, ``araw`` the raw pivot-column
    values of the trailing columns.  The pivotal column is scaled by the
    absolute pivot inverse and trailing columns grow by the scaled column
    times |araw|; entries stay nonnegative.  Returns the updated array.
    """
    from .core import invert_2x2

    out = np.array(c, dtype=np.float64)
    if pivot.kind == "1x1":
        eliminate_rows_1x1(out, q, pivot.d[0], np.asarray(araw, dtype=np.float64),
                           signed=False)
    elif pivot.kind == "2x2":
        araw = np.asarray(araw, dtype=np.float64).reshape(2, -1)
        inv = invert_2x2(*pivot.d, small)
        eliminate_rows_2x2(out, q, inv, araw[0], araw[1], signed=False)
    else:
        out[:, q] = 0.0
    return out


@dataclass
class DominanceTrace:
    """Aligned per-step snapshots of the true below-diagonal rows and the C
    rows (both in working column order), plus the static row-to-C-row map."""

    a21_steps: list[np.ndarray]
    c_steps: list[np.ndarray]
    row_map: np.ndarray


@dataclass
class CompressedResult:
    factorization: "PartialFactorization"
    growth: GrowthTrace
    stats: TppStats
    compressed: CompressedMatrix
    trailing_a11: np.ndarray
    trailing_below: np.ndarray
    dominance: DominanceTrace | None = None
    front: FrontBuffer = field(repr=False, default=None)


def factor_compressed(matrix: SupernodeMatrix, mode: str,
                      params: PivotParams | None = None,
                      compressed: CompressedMatrix | None = None,
                      track_dominance: bool = False) -> CompressedResult:
    """Compressed threshold pivoting over a supernode.

    Stages: build C from the below-diagonal block (unless a pre-merged C is
    supplied), factor the stacked (A11; C) trapezoid with pivots restricted
    to the top block, then apply the recorded permutation and pivot
    sequence to the real rows with no further tests.  The growth trace is
    measured over the true working matrix (top block plus replayed rows),
    not over C.
    """
    params = params or PivotParams()
    if compressed is None:
        builder = build_strict if mode == "strict" else build_relaxed
        compressed = builder(matrix.a21)
    elif compressed.mode != mode:
        raise ValueError(f"compressed matrix mode {compressed.mode!r} != {mode!r}")
    if mode not in ("strict", "relaxed"):
        raise ValueError(f"unknown mode {mode!r}")

    front = FrontBuffer(matrix.a11, compressed.rows, abs_below=(mode == "strict"))
    a11_growth = GrowthRecorder(front, include_below=False)
    c_steps = [front.below.copy()] if track_dominance else None

    def on_pivot(f, blk):
        a11_growth(f, blk)
        if c_steps is not None:
            c_steps.append(f.below.copy())

    stats = run_pivot_loop(front, params, on_pivot=on_pivot)

    replay = ColumnReplay(matrix.a21, front.history, snapshots=True)
    below = replay.run()
    fact = build_factorization(front, matrix.n, below_l=below)

    # Growth over the true working matrix: combine the top-block trace with
    # the per-step maxima of the replayed rows' active columns (aligned like
    # the recorder, intermediate 2x2 entries duplicated).
    mu = list(a11_growth.mu)
    if matrix.n > matrix.p:
        snaps = replay.snapshots
        mu_below = [_active_below_max(snaps[0], 0, matrix.p)]
        e = 0
        for step, blk in enumerate(front.pivots, start=1):
            e += blk.size
            v = _active_below_max(snaps[step], e, matrix.p)
            mu_below.extend([v] * blk.size)
        mu = [max(a, b) for a, b in zip(mu, mu_below)]
    growth = GrowthTrace(np.asarray(mu, dtype=np.float64), list(front.pivots))

    dom = None
    if track_dominance:
        dom = DominanceTrace(replay.snapshots, c_steps,
                             compressed.row_map(matrix.a21))
    trail_a11, _ = front.trailing_blocks()
    trailing_below = below[:, front.nelim :].copy()
    return CompressedResult(fact, growth, stats, compressed, trail_a11,
                            trailing_below, dom, front)


def _active_below_max(rows: np.ndarray, nelim: int, p: int) -> float:
    if rows.size == 0 or nelim >= p:
        return 0.0
    return float(np.abs(rows[:, nelim:p]).max())


def check_dominance(a21_steps: list[np.ndarray], c_steps: list[np.ndarray],
                    row_map: np.ndarray, rel_slack: float = 1e-12) -> bool:
    """Per-row dominance: |a(i, k)| <= c(j, k) * (1 + slack) at every
    recorded step for every row i represented by C row j, over all columns.

    Rows with no representative (map entry -1) are skipped; the strict
    partition covers every row, so none are skipped there.
    """
    ok, _ = dominance_violation(a21_steps, c_steps, row_map, rel_slack)
    return ok


def dominance_violation(a21_steps, c_steps, row_map, rel_slack: float = 1e-12):
    """(ok, first_violation) where first_violation is (step, row, col) of
    the first failing comparison, or None."""
    if len(a21_steps) != len(c_steps):
        raise ValueError("misaligned traces")
    row_map = np.asarray(row_map)
    covered = row_map >= 0
    for step, (rows, c) in enumerate(zip(a21_steps, c_steps)):
        if rows.size == 0 or not covered.any():
            continue
        # strict C rows are nonnegative by construction; the abs covers the
        # signed rows of a relaxed trace
        bound = np.abs(c[row_map[covered], :]) * (1.0 + rel_slack)
        bad = np.abs(rows[covered, :]) > bound
        if bad.any():
            i, k = np.argwhere(bad)[0]
            return False, (step, int(np.where(covered)[0][i]), int(k))
    return True, None
