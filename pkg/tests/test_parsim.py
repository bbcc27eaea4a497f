"""Logical-processor simulation: partitioning, tree merges, value
equivalence with the serial strategies, and counter/model parity."""

import numpy as np
import pytest

from pivotkit import (
    GeneratorSpec,
    Partition,
    PivotParams,
    build_relaxed,
    build_strict,
    factor_compressed,
    factor_restricted,
    factor_tpp,
    generate,
    merge_relaxed,
    merge_strict,
    scheme_costs,
    simulate,
)
from pivotkit.parsim import METHODS, tree_reduce

from pivotkit.core import SupernodeMatrix

from conftest import WORKED_A21, random_supernode


def all2x2(n, p, seed=0):
    return generate(GeneratorSpec("all-2x2-accept", n, p, seed=seed)).supernode


class TestPartition:
    def test_blocks_cover_and_balance(self):
        part = Partition(13, 4)
        blocks = part.blocks
        assert blocks[0][0] == 0 and blocks[-1][1] == 13
        sizes = [hi - lo for lo, hi in blocks]
        assert sum(sizes) == 13
        assert max(sizes) - min(sizes) <= 1
        for (a0, a1), (b0, b1) in zip(blocks, blocks[1:]):
            assert a1 == b0

    def test_power_of_two_required(self):
        with pytest.raises(ValueError):
            Partition(10, 3)

    def test_empty_rows_allowed(self):
        assert all(hi == lo for lo, hi in Partition(0, 8).blocks)


class TestMergeStrict:
    def test_zero_is_identity(self):
        c = build_strict(WORKED_A21)
        zero = build_strict(np.zeros((0, 3)))
        merged = merge_strict(c, zero)
        assert np.array_equal(merged.rows, c.rows)
        assert merged.provenance == c.provenance

    def test_split_equals_whole(self):
        c_whole = build_strict(WORKED_A21)
        c1 = build_strict(WORKED_A21[:2], row_offset=0)
        c2 = build_strict(WORKED_A21[2:], row_offset=2)
        merged = merge_strict(c1, c2)
        assert np.array_equal(merged.rows, c_whole.rows)
        assert merged.provenance == c_whole.provenance

    def test_commutative(self):
        rng = np.random.default_rng(0)
        a = build_strict(rng.normal(size=(6, 4)), row_offset=0)
        b = build_strict(rng.normal(size=(5, 4)), row_offset=6)
        ab, ba = merge_strict(a, b), merge_strict(b, a)
        assert np.array_equal(ab.rows, ba.rows)
        assert ab.provenance == ba.provenance

    def test_tree_shape_independent(self):
        rng = np.random.default_rng(1)
        a21 = rng.normal(size=(17, 5))
        part = Partition(17, 4)
        leaves = [build_strict(a21[lo:hi], row_offset=lo) for lo, hi in part.blocks]
        balanced = tree_reduce(leaves, merge_strict)
        left_fold = leaves[0]
        for leaf in leaves[1:]:
            left_fold = merge_strict(left_fold, leaf)
        serial = build_strict(a21)
        for got in (balanced, left_fold):
            assert np.array_equal(got.rows, serial.rows)
            assert got.provenance == serial.provenance

    def test_mode_mismatch(self):
        with pytest.raises(ValueError):
            merge_strict(build_strict(WORKED_A21), build_relaxed(WORKED_A21))


class TestMergeRelaxed:
    def test_empty_is_identity(self):
        r = build_relaxed(WORKED_A21)
        empty = build_relaxed(np.zeros((0, 3)))
        merged = merge_relaxed(r, empty)
        assert np.array_equal(merged.rows, r.rows)

    def test_single_leaf_equals_serial(self):
        m = random_supernode(3, 30, 6)
        sim = simulate("relaxed", m, 1, PivotParams(u=0.1))
        serial = factor_compressed(m, "relaxed", PivotParams(u=0.1))
        assert np.array_equal(sim.compressed.rows, serial.compressed.rows)

    def test_merged_selection_is_valid(self):
        r1 = build_relaxed(WORKED_A21[:3], row_offset=0)
        r2 = build_relaxed(WORKED_A21[3:], row_offset=3)
        merged = merge_relaxed(r1, r2)
        # every selected row is an original row of the block
        for crow, prov in zip(merged.rows, merged.provenance):
            assert np.array_equal(crow, WORKED_A21[prov[0]])
        # per-column winners are maximal over the candidate stack
        stack = np.vstack([r1.rows, r2.rows])
        taken = set()
        for j, prov in enumerate(merged.provenance):
            if j >= merged.p:
                break
            others = [i for i in range(stack.shape[0])
                      if tuple(stack[i]) not in taken]
            col_best = max(abs(stack[i][j]) for i in others)
            assert abs(merged.rows[j][j]) == col_best
            taken.add(tuple(merged.rows[j]))

    def test_deterministic(self):
        m = random_supernode(5, 50, 8)
        a = simulate("relaxed", m, 4, PivotParams(u=0.1))
        b = simulate("relaxed", m, 4, PivotParams(u=0.1))
        assert np.array_equal(a.factorization.L, b.factorization.L)
        assert a.counters.as_tuple() == b.counters.as_tuple()


class TestSimulateValues:
    @pytest.mark.parametrize("P", [1, 2, 4, 8])
    @pytest.mark.parametrize("method", METHODS)
    def test_matches_serial_strategy(self, method, P):
        m = random_supernode(11, 45, 8)
        params = PivotParams(u=0.1)
        sim = simulate(method, m, P, params)
        if method in ("tpp_A", "tpp_B"):
            ref = factor_tpp(m, params).factorization
        elif method == "restricted":
            ref = factor_restricted(m, params).factorization
        elif method == "strict":
            ref = factor_compressed(m, "strict", params).factorization
        else:
            if P > 1:  # P-indexed strategy: only the P=1 tree matches serial
                return
            ref = factor_compressed(m, "relaxed", params).factorization
        got = sim.factorization
        assert np.array_equal(got.perm, ref.perm)
        assert got.pivots == ref.pivots
        assert np.array_equal(got.L, ref.L)

    def test_bad_processor_count(self):
        with pytest.raises(ValueError):
            simulate("strict", random_supernode(0, 8, 2), 3)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            simulate("fast", random_supernode(0, 8, 2), 2)


class TestCounterParity:
    def test_strict_messages_example(self):
        sim = simulate("strict", all2x2(64, 8), 8)
        assert sim.counters.msgs == 1 + 3

    def test_restricted_messages_example(self):
        for P in (1, 2, 4, 8, 16):
            sim = simulate("restricted", all2x2(64, 8), P)
            assert sim.counters.msgs == 1

    def test_variant_a_messages_example(self):
        sim = simulate("tpp_A", all2x2(32, 4), 4)
        assert sim.counters.msgs == 4 + 4

    @pytest.mark.parametrize("method", METHODS)
    def test_counters_equal_closed_forms(self, method):
        for (n, p) in ((2, 2), (9, 2), (16, 4), (40, 8), (67, 16)):
            m = all2x2(n, p, seed=n + p)
            for P in (1, 2, 4, 16):
                got = simulate(method, m, P).counters.as_tuple()
                want = scheme_costs(method, n, p, P).as_ints()
                assert got == want, (method, n, p, P)


class TestMergeErrors:
    def test_merge_relaxed_mode_mismatch(self):
        with pytest.raises(ValueError):
            merge_relaxed(build_relaxed(WORKED_A21), build_strict(WORKED_A21))

    def test_simulate_handles_zero_pivots(self):
        # a supernode with an identically zero column still simulates and
        # keeps counters nonnegative under every method
        a11 = np.diag([0.0, 2.0, 3.0, 4.0])
        m = SupernodeMatrix.from_blocks(a11, np.zeros((5, 4)))
        for method in METHODS:
            for P in (1, 4):
                r = simulate(method, m, P)
                assert all(c >= 0 for c in r.counters.as_tuple())
                kinds = [b.kind for b in r.factorization.pivots]
                assert kinds.count("zero") == 1
