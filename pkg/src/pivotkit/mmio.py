"""Matrix Market file I/O.

Supernodes travel as dense ``array`` files carrying an extra header
comment line ``%%supernode n p``; full symmetric systems travel as
``coordinate real symmetric`` files (lower triangle written; on read both
orientations are accepted but conflicting duplicates are rejected).
Values are written with 17 significant digits so binary64 round-trips
exactly.
"""

from __future__ import annotations

import numpy as np

from .core import SupernodeMatrix

BANNER = "%%MatrixMarket"


class MatrixIOError(ValueError):
    """Malformed or inconsistent matrix file."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_supernode(matrix: SupernodeMatrix, path: str) -> None:
    """Write a supernode as a dense array file with a %%supernode header."""
    v = matrix.values
    with open(path, "w") as fh:
        fh.write(f"{BANNER} matrix array real general\n")
        fh.write(f"%%supernode {matrix.n} {matrix.p}\n")
        fh.write(f"{matrix.n} {matrix.p}\n")
        for j in range(matrix.p):
            for i in range(matrix.n):
                fh.write(_fmt(v[i, j]) + "\n")


def read_supernode(path: str) -> SupernodeMatrix:
    """Read a supernode written by :func:`write_supernode`."""
    lines = _read_lines(path)
    header = lines[0].split()
    if len(header) < 5 or header[0] != BANNER or header[1].lower() != "matrix":
        raise MatrixIOError("malformed header")
    fmt, _field, symmetry = header[2].lower(), header[3].lower(), header[4].lower()
    if fmt != "array":
        raise MatrixIOError(f"expected array format, got {fmt}")
    # the supernode line is a structured comment
    sup = None
    idx = 1
    while idx < len(lines) and lines[idx].startswith("%"):
        if lines[idx].startswith("%%supernode"):
            parts = lines[idx].split()
            if len(parts) != 3:
                raise MatrixIOError("malformed header")
            sup = (int(parts[1]), int(parts[2]))
        idx += 1
    if sup is None:
        raise MatrixIOError("malformed header: missing %%supernode line")
    if idx >= len(lines):
        raise MatrixIOError("malformed header: missing size line")
    size = lines[idx].split()
    if len(size) != 2:
        raise MatrixIOError("malformed header: bad size line")
    n, p = int(size[0]), int(size[1])
    if (n, p) != sup:
        raise MatrixIOError(f"dimension mismatch: size line {(n, p)} vs supernode {sup}")
    if symmetry != "general":
        raise MatrixIOError("supernode files must be general arrays")
    vals = lines[idx + 1 :]
    if len(vals) != n * p:
        raise MatrixIOError(f"dimension mismatch: expected {n * p} values, got {len(vals)}")
    data = np.array([float(s) for s in vals]).reshape(p, n).T
    return SupernodeMatrix(data, p)


def write_symmetric(a: np.ndarray, path: str) -> None:
    """Write a full symmetric matrix in coordinate symmetric format (lower
    triangle, 1-based indices, explicit zeros omitted)."""
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise MatrixIOError("matrix must be square")
    entries = [(i, j, a[i, j]) for j in range(n) for i in range(j, n)
               if a[i, j] != 0.0]
    with open(path, "w") as fh:
        fh.write(f"{BANNER} matrix coordinate real symmetric\n")
        fh.write(f"{n} {n} {len(entries)}\n")
        for i, j, v in entries:
            fh.write(f"{i + 1} {j + 1} {_fmt(v)}\n")


def read_symmetric(path: str) -> np.ndarray:
    """Read a square symmetric matrix from a coordinate file.

    Entries may appear in either triangle; when both (i, j) and (j, i) are
    present they must agree exactly, otherwise the file is rejected as
    non-symmetric.
    """
    lines = _read_lines(path)
    header = lines[0].split()
    if len(header) < 5 or header[0] != BANNER or header[1].lower() != "matrix":
        raise MatrixIOError("malformed header")
    fmt, symmetry = header[2].lower(), header[4].lower()
    if fmt != "coordinate":
        raise MatrixIOError(f"expected coordinate format, got {fmt}")
    if symmetry not in ("symmetric", "general"):
        raise MatrixIOError(f"unsupported symmetry {symmetry}")
    idx = 1
    while idx < len(lines) and lines[idx].startswith("%"):
        idx += 1
    if idx >= len(lines):
        raise MatrixIOError("malformed header: missing size line")
    size = lines[idx].split()
    if len(size) != 3:
        raise MatrixIOError("malformed header: bad size line")
    nrows, ncols, nnz = (int(s) for s in size)
    if nrows != ncols:
        raise MatrixIOError("dimension mismatch: matrix must be square")
    entries = lines[idx + 1 :]
    if len(entries) != nnz:
        raise MatrixIOError(f"dimension mismatch: expected {nnz} entries, got {len(entries)}")
    a = np.zeros((nrows, nrows))
    seen: dict[tuple[int, int], float] = {}
    for line in entries:
        parts = line.split()
        if len(parts) != 3:
            raise MatrixIOError(f"bad coordinate line: {line!r}")
        i, j, v = int(parts[0]) - 1, int(parts[1]) - 1, float(parts[2])
        if not (0 <= i < nrows and 0 <= j < nrows):
            raise MatrixIOError("dimension mismatch: index out of range")
        key = (min(i, j), max(i, j))
        if key in seen and seen[key] != v:
            raise MatrixIOError(f"non-symmetric: entries {key} disagree")
        seen[key] = v
        a[i, j] = v
        a[j, i] = v
    return a


def write_dense_vector(b: np.ndarray, path: str) -> None:
    """Write a vector as an N x 1 dense array file."""
    b = np.asarray(b, dtype=np.float64).ravel()
    with open(path, "w") as fh:
        fh.write(f"{BANNER} matrix array real general\n")
        fh.write(f"{b.size} 1\n")
        for v in b:
            fh.write(_fmt(v) + "\n")


def read_dense_vector(path: str) -> np.ndarray:
    """Read an N x 1 dense array file."""
    lines = _read_lines(path)
    header = lines[0].split()
    if len(header) < 5 or header[0] != BANNER or header[2].lower() != "array":
        raise MatrixIOError("malformed header")
    idx = 1
    while idx < len(lines) and lines[idx].startswith("%"):
        idx += 1
    size = lines[idx].split()
    n, m = int(size[0]), int(size[1])
    if m != 1:
        raise MatrixIOError("expected a single-column array")
    vals = lines[idx + 1 :]
    if len(vals) != n:
        raise MatrixIOError("dimension mismatch")
    return np.array([float(s) for s in vals])


def _read_lines(path: str) -> list[str]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise MatrixIOError("malformed header: empty file")
    return lines
