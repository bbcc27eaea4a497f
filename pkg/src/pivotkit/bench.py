"""Matrix generation, end-to-end solves with iterative refinement, and
machine-readable reports.

The solve pipeline mirrors how a supernode factorization is consumed: the
chosen strategy eliminates what it can of the leading p columns, the
delayed columns join the Schur-complement-updated trailing block to form a
root matrix, and the root is factorized square (every column pivotable, so
everything is eliminated there, zero pivots included).  Solves run
forward / block-diagonal / backward substitution, skipping zero-pivot
components, followed by up to ``max_steps`` rounds of iterative
refinement with a stopping threshold of 1e-14 on the scaled residual.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .compressed import CompressedResult, factor_compressed
from .core import (
    PartialFactorization,
    PivotBlock,
    PivotParams,
    SupernodeMatrix,
    form_schur,
    solve_d_blocks,
)
from .restricted import RestrictedResult, factor_restricted
from .tpp import factor_tpp

KINDS = ("random-indefinite", "diag-dominant", "all-2x2-accept", "pathological-relaxed")
METHODS = ("tpp", "strict", "relaxed", "restricted")

REFINE_TOL = 1e-14


class RootFactorizationError(RuntimeError):
    """The root matrix could not be fully eliminated."""


@dataclass(frozen=True)
class GeneratorSpec:
    """Seeded description of a test matrix.

    ``u`` and ``epsilon`` only matter for the pathological kind, which is
    the 2p+1 x p chain matrix whose final row evades the relaxed compressed
    rows; for (n, p) = (5, 2) it is exactly the published counterexample.
    """

    kind: str
    n: int
    p: int
    seed: int = 0
    u: float = 0.01
    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if not (1 <= self.p <= self.n):
            raise ValueError(f"need 1 <= p <= n, got n={self.n}, p={self.p}")


@dataclass
class GeneratedProblem:
    supernode: SupernodeMatrix
    full: np.ndarray | None = None


def generate(spec: GeneratorSpec) -> GeneratedProblem:
    """Build the requested matrix; generation is bit-reproducible per seed."""
    rng = np.random.default_rng(spec.seed)
    n, p = spec.n, spec.p

    if spec.kind == "random-indefinite":
        w = rng.uniform(-1.0, 1.0, (n, n))
        a = (w + w.T) / 2.0
        signs = rng.choice([-1.0, 1.0], size=n)
        shifts = rng.uniform(0.5, 2.0, size=n)
        a[np.diag_indices(n)] = rng.uniform(-1.0, 1.0, size=n) + signs * shifts
        return GeneratedProblem(SupernodeMatrix(a[:, :p].copy(), p), a)

    if spec.kind == "diag-dominant":
        w = rng.uniform(-1.0, 1.0, (n, n))
        a = (w + w.T) / 2.0
        np.fill_diagonal(a, 0.0)
        signs = rng.choice([-1.0, 1.0], size=n)
        margins = rng.uniform(0.0, 1.0, size=n)
        a[np.diag_indices(n)] = signs * (np.abs(a).sum(axis=1) + 1.0 + margins)
        return GeneratedProblem(SupernodeMatrix(a[:, :p].copy(), p), a)

    if spec.kind == "all-2x2-accept":
        if p % 2:
            raise ValueError("all-2x2-accept needs even p")
        sigma = 10.0
        a11 = np.zeros((p, p))
        for b in range(p // 2):
            a11[2 * b + 1, 2 * b] = sigma
        # Off-block noise only: the block diagonals stay exactly zero so the
        # single-column threshold test always fails and every pair is taken
        # as a 2x2 on first sight.
        noise = 0.1 * rng.uniform(-1.0, 1.0, (p, p))
        mask = np.tril(np.ones((p, p), dtype=bool), -1)
        for b in range(p // 2):
            mask[2 * b + 1, 2 * b] = False
        a11[mask] += noise[mask]
        a21 = rng.uniform(-1.0, 1.0, (n - p, p))
        return GeneratedProblem(SupernodeMatrix.from_blocks(a11, a21), None)

    # pathological-relaxed
    if n != 2 * p + 1:
        raise ValueError("pathological-relaxed needs n = 2p + 1")
    inv_u = 1.0 / spec.u
    a11 = np.zeros((p, p))
    np.fill_diagonal(a11, 2.0)
    a11[0, 0] = 1.0
    for j in range(p - 1):
        a11[j + 1, j] = -1.0
        a11[j, j + 1] = -1.0
    a21 = np.vstack([inv_u * np.eye(p), np.full((1, p), inv_u - spec.epsilon)])
    sup = SupernodeMatrix.from_blocks(a11, a21)
    full = np.zeros((n, n))
    full[:p, :p] = sup.a11
    full[p:, :p] = a21
    full[:p, p:] = a21.T
    full[p:, p:] = (inv_u + 1.0) * np.eye(n - p)
    return GeneratedProblem(sup, full)


def backward_error(a: np.ndarray, x: np.ndarray, b: np.ndarray) -> float:
    """Scaled residual ||Ax - b||_inf / (||A||_inf ||x||_inf + ||b||_inf);
    0 when both numerator and denominator vanish."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != (b.size, x.size):
        raise ValueError("dimension mismatch")
    num = float(np.abs(a @ x - b).max()) if b.size else 0.0
    den = float(np.abs(a).sum(axis=1).max() * np.abs(x).max() + np.abs(b).max()) \
        if b.size else 0.0
    if den == 0.0:
        return 0.0
    return num / den


def factor_supernode(matrix: SupernodeMatrix, method: str,
                     params: PivotParams | None = None,
                     track_dominance: bool = False):
    """Dispatch one supernode factorization by method name."""
    if method == "tpp":
        return factor_tpp(matrix, params)
    if method in ("strict", "relaxed"):
        return factor_compressed(matrix, method, params,
                                 track_dominance=track_dominance)
    if method == "restricted":
        return factor_restricted(matrix, params)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _growth_trace(res):
    if isinstance(res, RestrictedResult):
        return res.growth_report.trace
    return res.growth


def _trailing(res):
    if isinstance(res, (CompressedResult, RestrictedResult)):
        return res.trailing_a11, res.trailing_below
    return res.front.trailing_blocks()


@dataclass
class SystemFactor:
    """Two-stage LDL^T factorization of a full symmetric system."""

    order: np.ndarray
    L: np.ndarray
    pivots: list[PivotBlock]
    small: float
    scale: np.ndarray | None
    supernode: PartialFactorization
    root: PartialFactorization
    growth_ratio: float
    max_abs_l: float

    @property
    def zero_pivots(self) -> int:
        return sum(1 for b in self.pivots if b.kind == "zero")


def factor_system(a: np.ndarray, p: int, method: str,
                  params: PivotParams | None = None,
                  equilibrate: bool = False) -> SystemFactor:
    """Factor a full symmetric system via the supernode-then-root pipeline.

    ``equilibrate`` applies the simple symmetric diagonal scaling
    s_i = 1 / sqrt(max_j |a(i,j)|) before factorizing (this is a crude
    stand-in for matching-based scalings, not a reimplementation of one).
    """
    params = params or PivotParams()
    a = np.asarray(a, dtype=np.float64)
    nn = a.shape[0]
    if a.shape != (nn, nn):
        raise ValueError("system matrix must be square")
    if not (1 <= p <= nn):
        raise ValueError(f"need 1 <= p <= n, got p={p}, n={nn}")

    scale = None
    awork = a
    if equilibrate:
        rowmax = np.abs(a).max(axis=1)
        rowmax[rowmax == 0.0] = 1.0
        scale = 1.0 / np.sqrt(rowmax)
        awork = a * np.outer(scale, scale)

    sup = SupernodeMatrix(awork[:, :p].copy(), p)
    res = factor_supernode(sup, method, params)
    fact = res.factorization
    ne1 = fact.nelim
    ndl = p - ne1

    trail_a11, trail_below = _trailing(res)
    a22 = awork[p:, p:]
    schur = form_schur(fact.L[p:, :], fact.pivots) if nn > p else np.zeros((0, 0))
    root_n = ndl + (nn - p)
    root = np.empty((root_n, root_n))
    root[:ndl, :ndl] = trail_a11
    root[ndl:, :ndl] = trail_below
    root[:ndl, ndl:] = trail_below.T
    root[ndl:, ndl:] = a22 - schur

    if root_n:
        root_res = factor_tpp(SupernodeMatrix(root), params)
        root_fact = root_res.factorization
        if root_fact.delayed:
            raise RootFactorizationError(
                f"root stalled with {len(root_fact.delayed)} uneliminated columns")
    else:
        root_fact = PartialFactorization(0, 0, np.arange(0), [], 0,
                                         np.zeros((0, 0)), [])

    # Original column ids of root working positions before the root permute.
    root_ids = np.concatenate([
        fact.perm[ne1:p],
        np.arange(p, nn),
    ]).astype(int)
    order = np.concatenate([
        fact.perm[:ne1],
        root_ids[root_fact.perm] if root_n else np.arange(0),
    ]).astype(int)

    l = np.zeros((nn, nn))
    l[:ne1, :ne1] = fact.L[:ne1, :]
    if root_n:
        row_block = np.vstack([fact.L[ne1:p, :], fact.L[p:, :]])
        l[ne1:, :ne1] = row_block[root_fact.perm, :]
        l[ne1:, ne1:] = root_fact.L
    np.fill_diagonal(l, 1.0)

    pivots = list(fact.pivots) + list(root_fact.pivots)
    strict_lower = np.abs(np.tril(l, -1))
    growth = _growth_trace(res)
    mu0 = growth.mu[0] if growth.mu.size else 0.0
    return SystemFactor(
        order=order,
        L=l,
        pivots=pivots,
        small=params.small,
        scale=scale,
        supernode=fact,
        root=root_fact,
        growth_ratio=float(growth.max_mu() / mu0) if mu0 > 0 else 0.0,
        max_abs_l=float(strict_lower.max()) if strict_lower.size else 0.0,
    )


def _forward_unit_lower(l: np.ndarray, b: np.ndarray) -> np.ndarray:
    z = b.copy()
    for j in range(l.shape[0] - 1):
        z[j + 1 :] -= l[j + 1 :, j] * z[j]
    return z


def _backward_unit_lower_t(l: np.ndarray, y: np.ndarray) -> np.ndarray:
    w = y.copy()
    for j in range(l.shape[0] - 1, -1, -1):
        w[j] -= l[j + 1 :, j] @ w[j + 1 :]
    return w


def ldl_solve(sf: SystemFactor, b: np.ndarray) -> np.ndarray:
    """One direct solve with the factored system (no refinement)."""
    bw = b * sf.scale if sf.scale is not None else b.copy()
    pb = bw[sf.order]
    z = _forward_unit_lower(sf.L, pb)
    y = solve_d_blocks(sf.pivots, z, sf.small)
    w = _backward_unit_lower_t(sf.L, y)
    x = np.empty_like(w)
    x[sf.order] = w
    if sf.scale is not None:
        x = x * sf.scale
    return x


@dataclass
class SolveReport:
    """Everything reported for one end-to-end solve."""

    method: str
    n: int
    p: int
    u: float
    nelim_supernode: int
    nelim_root: int
    zero_pivots: int
    delayed: int
    growth_ratio: float
    max_abs_l: float
    bwd_err: list[float]
    converged: bool
    singular: bool
    equilibrated: bool = False
    kind: str | None = None
    seed: int | None = None
    counters: dict | None = None
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "kind": self.kind,
            "seed": self.seed,
            "n": self.n,
            "p": self.p,
            "u": self.u,
            "nelim_supernode": self.nelim_supernode,
            "nelim_root": self.nelim_root,
            "zero_pivots": self.zero_pivots,
            "delayed": self.delayed,
            "growth_ratio": self.growth_ratio,
            "max_abs_l": self.max_abs_l,
            "bwd_err": list(self.bwd_err),
            "converged": self.converged,
            "singular": self.singular,
            "equilibrated": self.equilibrated,
            "counters": self.counters,
            "timings": dict(self.timings),
        }


def solve_with_refinement(a: np.ndarray, b: np.ndarray, method: str,
                          params: PivotParams | None = None,
                          p: int | None = None, max_steps: int = 10,
                          equilibrate: bool = False,
                          kind: str | None = None,
                          seed: int | None = None) -> tuple[SolveReport, np.ndarray]:
    """Factor, solve and iteratively refine A x = b.

    The backward-error sequence holds the initial solve plus one entry per
    refinement step, stopping early below 1e-14; its length is therefore at
    most ``max_steps + 1``.
    """
    params = params or PivotParams()
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    nn = a.shape[0]
    if p is None:
        p = min(32, nn)

    t0 = time.perf_counter()
    sf = factor_system(a, p, method, params, equilibrate=equilibrate)
    t1 = time.perf_counter()
    x = ldl_solve(sf, b)
    errs = [backward_error(a, x, b)]
    for _ in range(max_steps):
        if errs[-1] < REFINE_TOL:
            break
        r = b - a @ x
        x = x + ldl_solve(sf, r)
        errs.append(backward_error(a, x, b))
    t2 = time.perf_counter()

    nz_sn = sum(blk.size for blk in sf.supernode.pivots if blk.kind != "zero")
    nz_rt = sum(blk.size for blk in sf.root.pivots if blk.kind != "zero")
    rep = SolveReport(
        method=method,
        n=nn,
        p=p,
        u=params.u,
        nelim_supernode=nz_sn,
        nelim_root=nz_rt,
        zero_pivots=sf.zero_pivots,
        delayed=len(sf.supernode.delayed),
        growth_ratio=sf.growth_ratio,
        max_abs_l=sf.max_abs_l,
        bwd_err=errs,
        converged=errs[-1] < REFINE_TOL,
        singular=sf.zero_pivots > 0,
        equilibrated=equilibrate,
        kind=kind,
        seed=seed,
        timings={"factor_s": t1 - t0, "solve_refine_s": t2 - t1,
                 "total_s": t2 - t0},
    )
    return rep, x


REPORT_SCHEMA_ID = "pivotkit-report/1"


def report(runs: list[SolveReport]) -> dict:
    """Stable-schema JSON document plus the delayed-pivot comparison table.

    The comparison lists, per instance, each method's delayed count next to
    the extra delays it incurred relative to the plain threshold run of the
    same instance (absent when no such run exists).
    """
    doc = {"schema": REPORT_SCHEMA_ID, "runs": [r.to_dict() for r in runs],
           "comparison": []}
    groups: dict[tuple, dict[str, SolveReport]] = {}
    for r in runs:
        groups.setdefault((r.kind, r.seed, r.n, r.p, r.u), {})[r.method] = r
    for key, by_method in sorted(groups.items(), key=lambda kv: repr(kv[0])):
        base = by_method.get("tpp")
        for method in METHODS:
            r = by_method.get(method)
            if r is None:
                continue
            doc["comparison"].append({
                "kind": key[0], "seed": key[1], "n": key[2], "p": key[3],
                "u": key[4], "method": method, "delayed": r.delayed,
                "additional_delays_vs_tpp":
                    (r.delayed - base.delayed) if base is not None else None,
                "final_bwd_err": r.bwd_err[-1] if r.bwd_err else None,
            })
    return doc


def comparison_table(doc: dict) -> list[list]:
    """Delimited rows (header first) of the comparison block."""
    header = ["kind", "seed", "n", "p", "u", "method", "delayed",
              "additional_delays_vs_tpp", "final_bwd_err"]
    rows = [header]
    for c in doc["comparison"]:
        rows.append([c[h] for h in header])
    return rows
