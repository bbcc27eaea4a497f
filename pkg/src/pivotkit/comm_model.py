"""Closed-form operation, message and bandwidth costs of the five parallel
pivoting schemes, in exact arithmetic.

The model factorizes an n x p trapezoidal supernode on P processors under
the simplifying assumption that every pivot is a 2x2 accepted on first
sight (so no permutations are applied and there are exactly p/2 pivots).
Messages count critical-path latencies: a broadcast is 1 message and a
tree reduction over P processors is log2(P) messages no matter how many
values it carries.

The variant-B bandwidth is built from its derivation: the initial
replication of the p x p block costs (P-1)p(p+1)/2 words and each of the
p/2 pivots reduces 2 values at 4(P-1) words, for a total of
(P-1)p(p+5)/2.  Beware the superficially similar simplifications
-p(p+3)/2 + Pp(p+5)/2 and -p(3-p)/2 + Pp(p+5)/2: neither equals this sum,
and the simulator's measured words confirm the derivation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

SCHEMES = ("tpp_A", "tpp_B", "strict", "relaxed", "restricted")

#: Asymptotic classes under the assumption P = O(n).
ASYMPTOTICS = {
    "tpp_A": {"ops": "O(n p^2)", "msgs": "O(p log n)", "bw": "O(n p^2)"},
    "tpp_B": {"ops": "O(n p^3)", "msgs": "O(p log n)", "bw": "O(n p^2)"},
    "strict": {"ops": "O(n p^2)", "msgs": "O(log n)", "bw": "O(n p^2)"},
    "relaxed": {"ops": "O(n p^2)", "msgs": "O(log n)", "bw": "O(n p^2)"},
    "restricted": {"ops": "O(n p^2)", "msgs": "O(1)", "bw": "O(n p^2)"},
}


@dataclass(frozen=True)
class CostTriple:
    """Exact (operations, critical-path messages, bandwidth words)."""

    ops: int | Fraction
    msgs: int | Fraction
    bw: int | Fraction

    def as_ints(self) -> tuple[int, int, int]:
        out = []
        for v in (self.ops, self.msgs, self.bw):
            f = Fraction(v)
            if f.denominator != 1:
                raise ValueError(f"cost {v} is not integral")
            out.append(int(f))
        return tuple(out)


def _as_int(f: Fraction) -> int | Fraction:
    return int(f) if f.denominator == 1 else f


def _check_np(n: int, p: int) -> None:
    if p < 2 or p % 2 != 0:
        raise ValueError(f"model assumes all-2x2 pivots: p must be even >= 2, got {p}")
    if n < p:
        raise ValueError(f"need n >= p, got n={n}, p={p}")


def log2_exact(P: int) -> int:
    """log2 of a power of two; raises otherwise."""
    if P < 1 or P & (P - 1):
        raise ValueError(f"P must be a power of two >= 1, got {P}")
    return P.bit_length() - 1


def tpp_ops(n: int, p: int) -> int | Fraction:
    """Serial threshold-pivoting operation count:
    29p/6 - 3p^2/4 - p^3/3 + 2np + np^2/2 (exact)."""
    _check_np(n, p)
    f = (Fraction(29, 6) * p - Fraction(3, 4) * p**2 - Fraction(1, 3) * p**3
         + 2 * n * p + Fraction(1, 2) * n * p**2)
    return _as_int(f)


def reduction_costs(k: int, P: int) -> CostTriple:
    """Cost of reducing k values on a binary tree over P processors:
    (P-1)k operations, log2 P messages, 2(P-1)k words."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    lg = log2_exact(P)
    return CostTriple((P - 1) * k, lg, 2 * (P - 1) * k)


def scheme_costs(scheme: str, n: int, p: int, P: int) -> CostTriple:
    """Total (ops, msgs, bw) for one scheme on an n x p supernode over P
    processors, all pivots accepted immediately as 2x2s."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    _check_np(n, p)
    lg = log2_exact(P)
    t = Fraction(tpp_ops(n, p))
    half = Fraction(1, 2)

    if scheme == "tpp_A":
        ops = t
        msgs = p + half * p * lg
        bw = -half * p + half * P * p * (p + 2)
    elif scheme == "tpp_B":
        ops = t + (P - 1) * Fraction(tpp_ops(p, p))
        msgs = 1 + half * p * lg
        # replication + per-pivot reductions; see module docstring
        bw = half * (P - 1) * p * (p + 1) + 2 * (P - 1) * p
    elif scheme == "strict":
        ops = t + half * p * ((p - 1) * p + 3) + n * (2 * p - 1) + P * p**2
        msgs = 1 + lg
        bw = half * (P - 1) * p * (5 * p + 1)
    elif scheme == "relaxed":
        ops = t + half * p * ((p + 2) * p - 2) + (n + P) * p
        msgs = 1 + lg
        bw = half * (P - 1) * p * (5 * p + 1)
    else:  # restricted
        ops = t - p * (n - p)
        msgs = Fraction(1)
        bw = half * (P - 1) * p * (p + 1)

    return CostTriple(_as_int(Fraction(ops)), _as_int(Fraction(msgs)),
                      _as_int(Fraction(bw)))


def asymptotics(scheme: str) -> dict[str, str]:
    """Asymptotic class strings (P = O(n)) for one scheme."""
    if scheme not in ASYMPTOTICS:
        raise ValueError(f"unknown scheme {scheme!r}")
    return dict(ASYMPTOTICS[scheme])
