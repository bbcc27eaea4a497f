"""Shared fixtures: the worked figure matrices, the pathological chain
matrix, and independent oracles used across the suite."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from pivotkit import GeneratorSpec, SupernodeMatrix, generate

# 5 x 3 below-diagonal block both compression constructions are worked out on.
WORKED_A21 = np.array([
    [1.0, 10.0, 10.0],
    [2.0, 3.0, 4.0],
    [0.0, 10.0, -3.0],
    [4.0, -5.0, 4.0],
    [0.0, -6.0, 8.0],
])

WORKED_STRICT_C = np.array([[0.0, 0.0, 0.0], [4.0, 10.0, 10.0], [2.0, 6.0, 8.0]])
WORKED_RELAXED_C = np.array([[4.0, -5.0, 4.0], [1.0, 10.0, 10.0], [0.0, -6.0, 8.0]])


@pytest.fixture
def worked_a21():
    return WORKED_A21.copy()


def pathological(u: float = 0.01, epsilon: float = 1e-6) -> SupernodeMatrix:
    """The 5 x 2 matrix whose final row evades the relaxed compressed rows."""
    return generate(GeneratorSpec("pathological-relaxed", 5, 2,
                                  u=u, epsilon=epsilon)).supernode


def random_supernode(seed: int, n: int, p: int) -> SupernodeMatrix:
    return generate(GeneratorSpec("random-indefinite", n, p, seed=seed)).supernode


def random_supernode_zero_below(seed: int, n: int, p: int) -> SupernodeMatrix:
    """Random symmetric top block over an explicitly zero below block."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1.0, 1.0, (p, p))
    a11 = (w + w.T) / 2.0
    return SupernodeMatrix.from_blocks(a11, np.zeros((n - p, p)))


def itemized_tpp_ops(n: int, p: int) -> Fraction:
    """Independent per-pivot oracle for the serial operation count: the
    literal sum of scan + test + apply + update terms over the p/2 pivots."""
    total = Fraction(0)
    for i in range(1, p // 2 + 1):
        scan = 2 * (n - 2 * i - 1)
        test = 18
        apply = 4 * (n - 2 * i)
        update = (p - 2 * i) * (2 * n - p - 2 * i + 1)
        total += scan + test + apply + update
    return total


def eliminate_full_reference(a: np.ndarray, steps: list[int]) -> np.ndarray:
    """Textbook right-looking elimination on a full dense symmetric matrix:
    ``steps`` lists pivot block sizes (1 or 2) applied at the leading
    position in order.  Returns the matrix with L overwriting the pivot
    columns and the trailing block fully updated.  Written independently of
    the package kernels (explicit loops, generic inverse)."""
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    q = 0
    for s in steps:
        if s == 1:
            d = a[q, q]
            rawcol = a[:, q].copy()
            for i in range(q + 1, n):
                li = rawcol[i] / d
                for k in range(q + 1, n):
                    a[i, k] -= li * rawcol[k]
                a[i, q] = li
        else:
            dblk = np.array([[a[q, q], a[q + 1, q]], [a[q + 1, q], a[q + 1, q + 1]]])
            dinv = np.linalg.inv(dblk)
            raw = a[q + 2 :, q : q + 2].copy()
            lrows = raw @ dinv
            for i in range(q + 2, n):
                for k in range(q + 2, n):
                    a[i, k] -= lrows[i - q - 2, 0] * raw[k - q - 2, 0] \
                        + lrows[i - q - 2, 1] * raw[k - q - 2, 1]
            a[q + 2 :, q : q + 2] = lrows
        q += s
    return a


def reconstruction_error(matrix: SupernodeMatrix, fact, max_mu: float) -> tuple[float, float]:
    """(max residual over the eliminated block, allowed bound)."""
    n, p, ne = matrix.n, matrix.p, fact.nelim
    perm = fact.perm
    full_rows = np.concatenate([perm, np.arange(p, n)])
    papt = matrix.values[np.ix_(full_rows, perm)]
    rec = fact.L @ fact.d_matrix() @ fact.L[:ne, :].T
    err = float(np.abs(papt[:, :ne] - rec).max()) if ne else 0.0
    bound = 50.0 * np.finfo(np.float64).eps * max(n, p) * max_mu
    return err, bound
