"""Restricted pivoting: tests look at the diagonal block only.

The threshold loop runs on the symmetric top block as if the rows below it
did not exist, then the accepted pivot sequence is applied to those rows
with no further tests.  This needs no communication at all but gives up
any bound on the below-diagonal entries of L; the realized growth is
reported for a-posteriori inspection rather than asserted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ColumnReplay,
    FrontBuffer,
    GrowthTrace,
    PartialFactorization,
    PivotParams,
    SupernodeMatrix,
)
from .tpp import GrowthRecorder, TppStats, build_factorization, run_pivot_loop


@dataclass
class GrowthReport:
    """Realized (not guaranteed) growth of a restricted factorization."""

    trace: GrowthTrace
    max_abs_l: float
    max_abs_l21: float

    @property
    def growth_ratio(self) -> float:
        mu0 = self.trace.mu[0]
        return float(self.trace.max_mu() / mu0) if mu0 > 0 else 0.0


@dataclass
class RestrictedResult:
    factorization: PartialFactorization
    growth_report: GrowthReport
    stats: TppStats
    trailing_a11: np.ndarray
    trailing_below: np.ndarray
    front: FrontBuffer = field(repr=False, default=None)


def factor_restricted(matrix: SupernodeMatrix,
                      params: PivotParams | None = None) -> RestrictedResult:
    """Factor a supernode with pivot tests restricted to the top block.

    Because the tests scan a subset of the rows TPP scans, every pivot TPP
    accepts is accepted here too; the delayed set is never larger.
    """
    params = params or PivotParams()
    front = FrontBuffer(matrix.a11)
    a11_growth = GrowthRecorder(front, include_below=False)
    stats = run_pivot_loop(front, params, on_pivot=a11_growth)

    replay = ColumnReplay(matrix.a21, front.history, snapshots=True)
    below = replay.run()
    fact = build_factorization(front, matrix.n, below_l=below)

    mu = list(a11_growth.mu)
    if matrix.n > matrix.p:
        snaps = replay.snapshots
        e = 0
        mu_below = [float(np.abs(snaps[0]).max()) if snaps[0].size else 0.0]
        for step, blk in enumerate(front.pivots, start=1):
            e += blk.size
            seg = snaps[step][:, e : matrix.p]
            v = float(np.abs(seg).max()) if seg.size else 0.0
            mu_below.extend([v] * blk.size)
        mu = [max(a, b) for a, b in zip(mu, mu_below)]
    trace = GrowthTrace(np.asarray(mu, dtype=np.float64), list(front.pivots))

    l21 = below[:, : front.nelim]
    report = GrowthReport(
        trace=trace,
        max_abs_l=fact.max_abs_l(),
        max_abs_l21=float(np.abs(l21).max()) if l21.size else 0.0,
    )
    trail_a11, _ = front.trailing_blocks()
    return RestrictedResult(fact, report, stats, trail_a11,
                            below[:, front.nelim :].copy(), front)
