"""Golden-value self checks runnable from the CLI.

Each check prints one PASS/FAIL line; the list of failures is returned so
the CLI can map it to an exit code.  The values asserted here are the
worked figure examples and spot values that also anchor the test suite.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .bench import GeneratorSpec, generate
from .comm_model import scheme_costs, tpp_ops
from .compressed import build_relaxed, build_strict, factor_compressed
from .core import PivotParams, SupernodeMatrix
from .tpp import factor_tpp

WORKED_A21 = np.array([
    [1.0, 10.0, 10.0],
    [2.0, 3.0, 4.0],
    [0.0, 10.0, -3.0],
    [4.0, -5.0, 4.0],
    [0.0, -6.0, 8.0],
])

WORKED_STRICT_C = np.array([[0.0, 0.0, 0.0], [4.0, 10.0, 10.0], [2.0, 6.0, 8.0]])
WORKED_RELAXED_C = np.array([[4.0, -5.0, 4.0], [1.0, 10.0, 10.0], [0.0, -6.0, 8.0]])


def pathological_supernode(u: float = 0.01, epsilon: float = 1e-6) -> SupernodeMatrix:
    return generate(GeneratorSpec("pathological-relaxed", 5, 2,
                                  u=u, epsilon=epsilon)).supernode


def run_selftest(verbose: bool = True) -> list[str]:
    failures: list[str] = []

    def check(name: str, ok: bool) -> None:
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    cs = build_strict(WORKED_A21)
    check("strict compressed matrix of the worked 5x3 example",
          np.array_equal(cs.rows, WORKED_STRICT_C) and cs.provenance[0] == ())
    cr = build_relaxed(WORKED_A21)
    check("relaxed compressed matrix of the worked 5x3 example",
          np.array_equal(cr.rows, WORKED_RELAXED_C))

    u, eps = 0.01, 1e-6
    params = PivotParams(u=u)
    M = pathological_supernode(u, eps)
    t = factor_tpp(M, params).factorization
    check("pathological matrix: threshold pivoting delays column 2",
          t.nelim == 1 and t.delayed == [1])
    s = factor_compressed(M, "strict", params).factorization
    check("pathological matrix: strict compressed delays column 2",
          s.nelim == 1 and s.delayed == [1])
    r = factor_compressed(M, "relaxed", params).factorization
    expect = 2.0 * (1.0 / u - eps)
    got = abs(r.L[4, 1]) if r.nelim == 2 else float("nan")
    check("pathological matrix: relaxed eliminates both, L entry = 2(1/u - eps)",
          r.nelim == 2 and abs(got - expect) <= 1e-9 * expect)

    check("serial operation count at (4, 2)", tpp_ops(4, 2) == 28)
    check("square-supernode operation count 29p/6 + 5p^2/4 + p^3/6",
          all(tpp_ops(p, p) == Fraction(29, 6) * p + Fraction(5, 4) * p**2
              + Fraction(1, 6) * p**3 for p in (2, 4, 8, 16)))
    check("compressed messages are 1 + log2(P)",
          scheme_costs("strict", 64, 8, 8).msgs == 4 and
          scheme_costs("relaxed", 64, 8, 8).msgs == 4)
    check("restricted messages are 1",
          all(scheme_costs("restricted", 64, 8, P).msgs == 1 for P in (1, 2, 4, 8)))
    check("variant A messages are p + p/2 log2(P)",
          scheme_costs("tpp_A", 64, 4, 4).msgs == 4 + 4)

    if verbose and failures:
        print(f"{len(failures)} of selftest checks failed")
    elif verbose:
        print("all selftest checks passed")
    return failures
