"""Dense trapezoidal supernode storage and elementary pivot operations.

A supernode is held as a dense n x p matrix whose top p x p block is
symmetric (only the lower triangle is authoritative) and whose remaining
n - p rows are a plain rectangle.  All pivoting strategies in this package
share the same working buffer (:class:`FrontBuffer`), the same elementary
column operations and the same scaled-determinant 2x2 inversion, so that
factorizations produced by different code paths are bitwise comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MACHINE_EPS = float(np.finfo(np.float64).eps)


class PivotError(ValueError):
    """A pivot block cannot be applied (zero value or failed determinant guard)."""


@dataclass(frozen=True)
class PivotParams:
    """Threshold-test parameters.

    ``u`` in (0, 0.5] trades stability against sparsity (entries of L are
    bounded by 1/u when the tests see the whole column); ``small`` is the
    drop tolerance below which entries count as zero.
    """

    u: float = 0.01
    small: float = 1e-20

    def __post_init__(self) -> None:
        if not 0.0 < self.u <= 0.5:
            raise ValueError(f"u must be in (0, 0.5], got {self.u}")
        if not self.small > 0.0:
            raise ValueError(f"small must be positive, got {self.small}")

    @property
    def inv_u(self) -> float:
        return 1.0 / self.u


class SupernodeMatrix:
    """Immutable dense n x p trapezoidal supernode.

    Rows 0..p-1 form the symmetric block (the constructor mirrors the lower
    triangle so ``values`` prints symmetric, but operations only ever read
    the lower triangle); rows p..n-1 are the rectangular below-diagonal
    block.
    """

    def __init__(self, values: np.ndarray, p: int | None = None):
        values = np.array(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("supernode values must be a 2-D array")
        n, ncols = values.shape
        if p is None:
            p = ncols
        if ncols != p:
            raise ValueError(f"expected {p} columns, got {ncols}")
        if not 1 <= p <= n:
            raise ValueError(f"need 1 <= p <= n, got n={n}, p={p}")
        if not np.all(np.isfinite(values)):
            raise ValueError("supernode contains non-finite values")
        top = values[:p, :]
        lower = np.tril(top)
        values[:p, :] = lower + lower.T - np.diag(np.diag(lower))
        self._values = values
        self.n = n
        self.p = p

    @classmethod
    def from_blocks(cls, a11: np.ndarray, a21: np.ndarray | None = None) -> "SupernodeMatrix":
        a11 = np.asarray(a11, dtype=np.float64)
        p = a11.shape[0]
        if a21 is None:
            a21 = np.zeros((0, p))
        a21 = np.asarray(a21, dtype=np.float64).reshape(-1, p)
        return cls(np.vstack([a11, a21]), p)

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def a11(self) -> np.ndarray:
        return self._values[: self.p, :]

    @property
    def a21(self) -> np.ndarray:
        return self._values[self.p :, :]

    def __repr__(self) -> str:
        return f"SupernodeMatrix(n={self.n}, p={self.p})"


@dataclass(frozen=True)
class PivotBlock:
    """One diagonal block of D: a 1x1 value, a symmetric 2x2 block or a zero.

    ``columns`` are original (pre-permutation) 0-based column indices;
    ``d`` stores (d,) for 1x1/zero blocks and (d11, d21, d22) for 2x2.
    """

    kind: str  # "1x1" | "2x2" | "zero"
    columns: tuple[int, ...]
    d: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in ("1x1", "2x2", "zero"):
            raise ValueError(f"unknown pivot kind {self.kind!r}")
        if self.kind == "2x2" and (len(self.columns) != 2 or len(self.d) != 3):
            raise ValueError("2x2 block needs two columns and three values")
        if self.kind in ("1x1", "zero") and (len(self.columns) != 1 or len(self.d) != 1):
            raise ValueError("1x1/zero block needs one column and one value")

    @property
    def size(self) -> int:
        return 2 if self.kind == "2x2" else 1


@dataclass
class PartialFactorization:
    """Result of eliminating ``nelim`` of the p supernode columns.

    ``perm`` lists original column indices in working order (eliminated
    first, in elimination order, then delayed).  ``L`` is n x nelim with
    rows 0..p-1 in permuted order and the below-diagonal rows untouched;
    its top nelim x nelim block is unit lower triangular.
    """

    n: int
    p: int
    perm: np.ndarray
    pivots: list[PivotBlock]
    nelim: int
    L: np.ndarray
    delayed: list[int]

    def d_matrix(self) -> np.ndarray:
        """Dense nelim x nelim block diagonal D."""
        d = np.zeros((self.nelim, self.nelim))
        j = 0
        for blk in self.pivots:
            if blk.kind == "2x2":
                d11, d21, d22 = blk.d
                d[j, j] = d11
                d[j + 1, j] = d21
                d[j, j + 1] = d21
                d[j + 1, j + 1] = d22
                j += 2
            else:
                d[j, j] = blk.d[0]
                j += 1
        return d

    def max_abs_l(self) -> float:
        return float(np.abs(self.L).max()) if self.L.size else 0.0


@dataclass
class GrowthTrace:
    """``mu[q]`` is the largest absolute entry of the active (not yet
    eliminated) part of the working matrix after q eliminations; ``mu[0]``
    covers the whole input.  For a 2x2 pivot taking q to q+2 the
    intermediate entry duplicates the post-pivot value.  ``pivots`` mirrors
    the factorization's pivot list so per-pivot bounds can be checked.
    """

    mu: np.ndarray
    pivots: list[PivotBlock] = field(default_factory=list)

    def max_mu(self) -> float:
        return float(self.mu.max()) if self.mu.size else 0.0

    def step_ratios(self) -> list[tuple[str, float]]:
        """(kind, mu_after / mu_before) per pivot; ratio 0 when mu_before is 0."""
        out = []
        q = 0
        for blk in self.pivots:
            s = blk.size
            before = self.mu[q]
            after = self.mu[q + s]
            out.append((blk.kind, after / before if before > 0 else 0.0))
            q += s
        return out


def column_max_below(matrix: np.ndarray, col: int, start_row: int = 0,
                     exclude: tuple[int, ...] = ()) -> tuple[float, int | None]:
    """Largest absolute value in ``matrix[start_row:, col]`` and the smallest
    row index attaining it, skipping rows in ``exclude``.

    Returns (0.0, None) when the scan range is empty.  Ties resolve to the
    lowest row index.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-D array")
    nrows = a.shape[0]
    if col >= a.shape[1]:
        raise IndexError(f"column {col} out of range")
    if start_row >= nrows:
        return 0.0, None
    vals = np.abs(a[start_row:, col]).copy()
    for e in exclude:
        if start_row <= e < nrows:
            vals[e - start_row] = -1.0
    if vals.size == 0 or vals.max() < 0.0:
        return 0.0, None
    idx = int(np.argmax(vals))
    return float(vals[idx]), start_row + idx


def det2x2_scaled(d11: float, d21: float, d22: float, small: float):
    """Scaled-determinant quantities of the symmetric block [[d11,d21],[d21,d22]].

    Returns (detscale, detpiv0, detpiv1, detpiv), or None when every block
    entry is below ``small``.  The pivot is scaled so the largest entry is
    one before the determinant is formed, which keeps the subsequent
    cancellation guard meaningful.
    """
    amax = max(abs(d11), abs(d21), abs(d22))
    if amax < small:
        return None
    detscale = 1.0 / amax
    detpiv1 = (d21 * detscale) * d21
    detpiv0 = (d22 * detscale) * d11
    detpiv = detpiv0 - detpiv1
    return detscale, detpiv0, detpiv1, detpiv


def det_guard_ok(detpiv: float, detpiv0: float, detpiv1: float, small: float) -> bool:
    """True when the block is safely nonsingular and cancellation in the
    determinant has not destroyed its accuracy."""
    return abs(detpiv) > max(small, abs(detpiv0) / 2.0, abs(detpiv1) / 2.0)


def invert_2x2(d11: float, d21: float, d22: float, small: float) -> tuple[float, float, float]:
    """Entries (i11, i21, i22) of the inverse of [[d11,d21],[d21,d22]],
    computed with the scaled-determinant scheme.  Raises PivotError when the
    determinant guard fails."""
    scaled = det2x2_scaled(d11, d21, d22, small)
    if scaled is None:
        raise PivotError("2x2 block entirely below drop tolerance")
    detscale, detpiv0, detpiv1, detpiv = scaled
    if not det_guard_ok(detpiv, detpiv0, detpiv1, small):
        raise PivotError("2x2 determinant guard failed")
    i11 = (d22 * detscale) / detpiv
    i21 = -(d21 * detscale) / detpiv
    i22 = (d11 * detscale) / detpiv
    return i11, i21, i22


def eliminate_rows_1x1(rows: np.ndarray, q: int, d: float, araw: np.ndarray,
                       signed: bool = True) -> None:
    """Apply a 1x1 pivot at column position ``q`` to detached rows in place.

    ``araw`` holds the raw pivot-column values of the trailing columns
    q+1..p-1 (taken from the symmetric block before it was scaled).  With
    ``signed=False`` the worst-case absolute-value form is used: the pivotal
    column is scaled by 1/|d| and trailing columns are increased by
    l * |araw|, preserving nonnegative dominance rows.
    """
    if signed:
        l = rows[:, q] / d
        rows[:, q] = l
        if araw.shape[0]:
            rows[:, q + 1 :] -= l[:, None] * araw[None, :]
    else:
        l = rows[:, q] / abs(d)
        rows[:, q] = l
        if araw.shape[0]:
            rows[:, q + 1 :] += l[:, None] * np.abs(araw)[None, :]


def eliminate_rows_2x2(rows: np.ndarray, q: int, inv: tuple[float, float, float],
                       araw_q: np.ndarray, araw_q1: np.ndarray,
                       signed: bool = True) -> None:
    """Apply a 2x2 pivot at column positions (q, q+1) to detached rows in
    place; ``inv`` holds the pivot-inverse entries from :func:`invert_2x2`.
    """
    i11, i21, i22 = inv
    if not signed:
        i11, i21, i22 = abs(i11), abs(i21), abs(i22)
    aq = rows[:, q].copy()
    aq1 = rows[:, q + 1].copy()
    lq = aq * i11 + aq1 * i21
    lq1 = aq * i21 + aq1 * i22
    rows[:, q] = lq
    rows[:, q + 1] = lq1
    if araw_q.shape[0]:
        if signed:
            rows[:, q + 2 :] -= lq[:, None] * araw_q[None, :] \
                + lq1[:, None] * araw_q1[None, :]
        else:
            rows[:, q + 2 :] += lq[:, None] * np.abs(araw_q)[None, :] \
                + lq1[:, None] * np.abs(araw_q1)[None, :]


def zero_rows_column(rows: np.ndarray, q: int) -> None:
    """Zero pivot: the L column is identically zero."""
    rows[:, q] = 0.0


@dataclass
class SwapEvent:
    i: int
    j: int


@dataclass
class PivotEvent:
    """Everything needed to replay one elimination on rows that were not in
    the working buffer: pivot kind/position, the pivot block (or its
    inverse) and the raw trailing-column values of the pivot column(s)."""

    kind: str
    pos: int
    d: tuple[float, ...]
    inv: tuple[float, float, float] | None
    araw_q: np.ndarray | None
    araw_q1: np.ndarray | None


class FrontBuffer:
    """Mutable working storage for one supernode (or stacked) factorization.

    ``w`` is (p + r) x p: the top p rows are the symmetric block with the
    lower triangle authoritative (the strict upper triangle is never read or
    written), the r below-rows are A21 rows or compressed rows.  Column
    swaps are applied symmetrically to the top block.  ``abs_below=True``
    switches below-row updates to the worst-case absolute-value form used by
    strict compressed pivoting.

    The buffer records an elimination history (swaps + pivots) so the same
    elementary operations can later be replayed on rows held elsewhere.
    """

    def __init__(self, a11: np.ndarray, below: np.ndarray | None = None,
                 abs_below: bool = False):
        a11 = np.asarray(a11, dtype=np.float64)
        p = a11.shape[0]
        if a11.shape != (p, p):
            raise ValueError("top block must be square")
        if below is None:
            below = np.zeros((0, p))
        below = np.array(below, dtype=np.float64).reshape(-1, p)
        self.p = p
        self.r = below.shape[0]
        self.w = np.vstack([np.tril(a11), below])
        self.abs_below = abs_below
        self.perm = np.arange(p)
        self.nelim = 0
        self.pivots: list[PivotBlock] = []
        self.history: list[SwapEvent | PivotEvent] = []

    @property
    def below(self) -> np.ndarray:
        return self.w[self.p :, :]

    def sym_entry(self, i: int, j: int) -> float:
        """Entry (i, j) of the symmetric top block, read from the lower triangle."""
        return float(self.w[i, j] if i >= j else self.w[j, i])

    def col_abs_max(self, j: int, lo: int, exclude: tuple[int, ...] = (),
                    include_below: bool = True) -> float:
        """max |a(i, j)| over top positions i in [lo, p) minus ``exclude``,
        plus (optionally) all below-rows."""
        p = self.p
        m = 0.0
        if lo < p:
            if j <= lo:
                top = np.abs(self.w[lo:p, j])
            else:
                top = np.empty(p - lo)
                top[: j - lo] = self.w[j, lo:j]
                top[j - lo :] = self.w[j:p, j]
                np.abs(top, out=top)
            for e in exclude:
                if lo <= e < p:
                    top[e - lo] = -1.0
            m = float(top.max()) if top.size else 0.0
        if include_below and self.r:
            m = max(m, float(np.abs(self.w[p:, j]).max()))
        return max(m, 0.0)

    def row_abs_argmax(self, m: int, lo: int) -> int:
        """Position of the largest |a(m, j)| over columns lo..m-1."""
        vals = np.abs(self.w[m, lo:m])
        return lo + int(np.argmax(vals))

    def swap_columns(self, i: int, j: int, record: bool = True) -> None:
        """Symmetric swap of columns/rows i and j of the top block; plain
        column swap for below-rows."""
        p = self.p
        if not (0 <= i < p and 0 <= j < p):
            raise IndexError("swap index out of range")
        if i == j:
            return
        if i > j:
            i, j = j, i
        w = self.w
        w[i, i], w[j, j] = w[j, j], w[i, i]
        tmp = w[i, :i].copy()
        w[i, :i] = w[j, :i]
        w[j, :i] = tmp
        for k in range(i + 1, j):
            w[k, i], w[j, k] = w[j, k], w[k, i]
        if j + 1 < p:
            tmp = w[j + 1 : p, i].copy()
            w[j + 1 : p, i] = w[j + 1 : p, j]
            w[j + 1 : p, j] = tmp
        if self.r:
            tmp = w[p:, i].copy()
            w[p:, i] = w[p:, j]
            w[p:, j] = tmp
        self.perm[i], self.perm[j] = self.perm[j], self.perm[i]
        if record:
            self.history.append(SwapEvent(i, j))

    def apply_1x1(self, e: int) -> PivotBlock:
        """Eliminate the column at position ``e`` with a 1x1 pivot, updating
        every trailing active column (right-looking)."""
        p, w = self.p, self.w
        d = float(w[e, e])
        if d == 0.0:
            raise PivotError("zero 1x1 pivot value")
        araw = w[e + 1 : p, e].copy()
        l_top = araw / d
        w[e + 1 : p, e] = l_top
        if araw.shape[0]:
            # full-block outer update; the strict upper triangle is scratch
            # space that nothing ever reads
            w[e + 1 : p, e + 1 : p] -= l_top[:, None] * araw[None, :]
        if self.r:
            eliminate_rows_1x1(w[p:, :], e, d, araw, signed=not self.abs_below)
        blk = PivotBlock("1x1", (int(self.perm[e]),), (d,))
        self.pivots.append(blk)
        self.history.append(PivotEvent("1x1", e, (d,), None, araw, None))
        self.nelim = e + 1
        return blk

    def apply_2x2(self, e: int, params: PivotParams) -> PivotBlock:
        """Eliminate the columns at positions (e, e+1) with a 2x2 pivot."""
        p, w = self.p, self.w
        d11 = float(w[e, e])
        d21 = float(w[e + 1, e])
        d22 = float(w[e + 1, e + 1])
        inv = invert_2x2(d11, d21, d22, params.small)
        i11, i21, i22 = inv
        araw_q = w[e + 2 : p, e].copy()
        araw_q1 = w[e + 2 : p, e + 1].copy()
        lq = araw_q * i11 + araw_q1 * i21
        lq1 = araw_q * i21 + araw_q1 * i22
        w[e + 2 : p, e] = lq
        w[e + 2 : p, e + 1] = lq1
        if araw_q.shape[0]:
            w[e + 2 : p, e + 2 : p] -= lq[:, None] * araw_q[None, :] \
                + lq1[:, None] * araw_q1[None, :]
        if self.r:
            eliminate_rows_2x2(w[p:, :], e, inv, araw_q, araw_q1,
                               signed=not self.abs_below)
        blk = PivotBlock("2x2", (int(self.perm[e]), int(self.perm[e + 1])),
                         (d11, d21, d22))
        self.pivots.append(blk)
        self.history.append(PivotEvent("2x2", e, (d11, d21, d22), inv, araw_q, araw_q1))
        self.nelim = e + 2
        return blk

    def apply_zero(self, e: int) -> PivotBlock:
        """Record a zero pivot: D gets a 0 and the L column is zero."""
        p, w = self.p, self.w
        w[e + 1 : p, e] = 0.0
        if self.r:
            zero_rows_column(w[p:, :], e)
        blk = PivotBlock("zero", (int(self.perm[e]),), (0.0,))
        self.pivots.append(blk)
        self.history.append(PivotEvent("zero", e, (0.0,), None, None, None))
        self.nelim = e + 1
        return blk

    def active_abs_max(self, include_below: bool = True) -> float:
        """Largest absolute entry of the active region: trailing columns of
        the symmetric block (lower triangle) plus below-rows."""
        p, e = self.p, self.nelim
        m = 0.0
        if e < p:
            m = float(np.abs(np.tril(self.w[e:p, e:p])).max())
            if include_below and self.r:
                m = max(m, float(np.abs(self.w[p:, e:p]).max()))
        return m

    def l_matrix(self) -> np.ndarray:
        """(p + r) x nelim unit-lower L columns in working row order."""
        ne = self.nelim
        top = np.tril(self.w[: self.p, :ne], -1)
        np.fill_diagonal(top, 1.0)
        return np.vstack([top, self.w[self.p :, :ne]])

    def trailing_blocks(self) -> tuple[np.ndarray, np.ndarray]:
        """(symmetrized delayed block, below-rows of delayed columns)."""
        e, p = self.nelim, self.p
        t = np.tril(self.w[e:p, e:p])
        t = t + t.T - np.diag(np.diag(t))
        return t, self.w[p:, e:p].copy()


def permute_symmetric(front: FrontBuffer, i: int, j: int) -> None:
    """Swap columns i and j of the working front, interpreting the top block
    symmetrically (rows swap with columns); below-rows only swap columns."""
    front.swap_columns(i, j)


def apply_1x1_pivot(front: FrontBuffer, q: int) -> PivotBlock:
    """Eliminate column position ``q`` as a 1x1 pivot (see FrontBuffer.apply_1x1)."""
    return front.apply_1x1(q)


def apply_2x2_pivot(front: FrontBuffer, q: int,
                    params: PivotParams | None = None) -> PivotBlock:
    """Eliminate column positions (q, q+1) as a 2x2 pivot."""
    return front.apply_2x2(q, params or PivotParams())


class ColumnReplay:
    """Replays a recorded elimination history onto rows kept outside the
    working buffer (the real A21 rows in compressed/restricted modes).

    The replay performs the identical elementary operations, in the same
    order and with the same multiplicands, as an in-loop update of those
    rows would have done, so the resulting L values match bitwise.
    """

    def __init__(self, rows: np.ndarray, history, snapshots: bool = False):
        self.rows = np.array(rows, dtype=np.float64)
        self.history = history
        self.snapshots: list[np.ndarray] | None = [] if snapshots else None
        if snapshots:
            self.snapshots.append(self.rows.copy())

    def run(self) -> np.ndarray:
        """Apply the history; snapshots (when enabled) hold the initial state
        and the state after each pivot event, aligned with per-pivot traces
        of the working buffer."""
        rows = self.rows
        for ev in self.history:
            if isinstance(ev, SwapEvent):
                tmp = rows[:, ev.i].copy()
                rows[:, ev.i] = rows[:, ev.j]
                rows[:, ev.j] = tmp
                continue
            if ev.kind == "1x1":
                eliminate_rows_1x1(rows, ev.pos, ev.d[0], ev.araw_q)
            elif ev.kind == "2x2":
                eliminate_rows_2x2(rows, ev.pos, ev.inv, ev.araw_q, ev.araw_q1)
            else:
                zero_rows_column(rows, ev.pos)
            if self.snapshots is not None:
                self.snapshots.append(rows.copy())
        return rows


def form_schur(l21: np.ndarray, pivots: list[PivotBlock],
               l21_right: np.ndarray | None = None) -> np.ndarray:
    """S = L21 * D * L21^T for the eliminated columns.

    The product is formed from one triangle and mirrored, so the output is
    symmetric to bit equality.  ``l21_right`` defaults to ``l21``.
    """
    if l21_right is None:
        l21_right = l21
    if l21.shape != l21_right.shape:
        raise ValueError("dimension mismatch between L21 factors")
    nelim = sum(b.size for b in pivots)
    if l21.shape[1] != nelim:
        raise ValueError(f"L21 has {l21.shape[1]} columns, pivots eliminate {nelim}")
    ld = np.empty_like(l21)
    j = 0
    for blk in pivots:
        if blk.kind == "2x2":
            d11, d21, d22 = blk.d
            ld[:, j] = l21[:, j] * d11 + l21[:, j + 1] * d21
            ld[:, j + 1] = l21[:, j] * d21 + l21[:, j + 1] * d22
            j += 2
        else:
            ld[:, j] = l21[:, j] * blk.d[0]
            j += 1
    s = ld @ l21_right.T
    lo = np.tril(s)
    return lo + lo.T - np.diag(np.diag(lo))


def solve_d_blocks(pivots: list[PivotBlock], y: np.ndarray, small: float) -> np.ndarray:
    """Apply D^-1 blockwise using the scaled-determinant inversion; zero
    pivots skip their component (set to 0)."""
    out = np.array(y, dtype=np.float64)
    j = 0
    for blk in pivots:
        if blk.kind == "2x2":
            i11, i21, i22 = invert_2x2(*blk.d, small)
            a, b = out[j], out[j + 1]
            out[j] = a * i11 + b * i21
            out[j + 1] = a * i21 + b * i22
            j += 2
        elif blk.kind == "zero":
            out[j] = 0.0
            j += 1
        else:
            out[j] = out[j] / blk.d[0]
            j += 1
    return out
