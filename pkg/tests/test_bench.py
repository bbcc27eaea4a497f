"""Generators, backward error, the end-to-end solve pipeline and reports."""

import json
from fractions import Fraction

import numpy as np
import pytest

from pivotkit import (
    GeneratorSpec,
    PivotParams,
    backward_error,
    factor_tpp,
    generate,
    report,
    solve_with_refinement,
)
from pivotkit.bench import REFINE_TOL, comparison_table, factor_system, ldl_solve


class TestGenerate:
    def test_pathological_is_exact_counterexample(self):
        sup = generate(GeneratorSpec("pathological-relaxed", 5, 2,
                                     u=0.01, epsilon=1e-6)).supernode
        want = np.array([
            [1.0, -1.0],
            [-1.0, 2.0],
            [100.0, 0.0],
            [0.0, 100.0],
            [99.999999, 99.999999],
        ])
        assert np.array_equal(sup.values, want)

    def test_pathological_requires_chain_shape(self):
        with pytest.raises(ValueError):
            generate(GeneratorSpec("pathological-relaxed", 6, 2))

    def test_seeded_generation_is_bit_reproducible(self):
        spec = GeneratorSpec("diag-dominant", 40, 10, seed=123)
        a = generate(spec)
        b = generate(spec)
        assert np.array_equal(a.supernode.values, b.supernode.values)
        assert np.array_equal(a.full, b.full)

    def test_all_2x2_accept_runs_clean(self):
        sup = generate(GeneratorSpec("all-2x2-accept", 64, 8, seed=3)).supernode
        res = factor_tpp(sup)
        fact = res.factorization
        assert fact.nelim == 8
        assert [b.kind for b in fact.pivots] == ["2x2"] * 4
        assert [b.columns for b in fact.pivots] == [(0, 1), (2, 3), (4, 5), (6, 7)]
        assert res.stats.rejected_2x2 == 0

    def test_all_2x2_accept_needs_even_p(self):
        with pytest.raises(ValueError):
            generate(GeneratorSpec("all-2x2-accept", 10, 3))

    def test_diag_dominant_really_dominates(self):
        prob = generate(GeneratorSpec("diag-dominant", 30, 30, seed=9))
        a = prob.full
        offsum = np.abs(a).sum(axis=1) - np.abs(np.diag(a))
        assert (np.abs(np.diag(a)) > offsum).all()

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            GeneratorSpec("dense-random", 4, 2)


class TestBackwardError:
    def test_exact_solve_of_identity(self):
        x = np.array([1.0, -2.0, 3.0])
        assert backward_error(np.eye(3), x, x) == 0.0

    def test_zero_solution_nonzero_rhs(self):
        a = np.eye(4)
        b = np.array([1.0, 2.0, -1.0, 0.5])
        assert backward_error(a, np.zeros(4), b) == 1.0

    def test_zero_over_zero(self):
        assert backward_error(np.zeros((2, 2)), np.zeros(2), np.zeros(2)) == 0.0

    def test_matches_exact_rational_oracle(self):
        rng = np.random.default_rng(8)
        a = rng.uniform(-1.0, 1.0, (20, 20))
        x = rng.uniform(-1.0, 1.0, 20)
        b = a @ x + rng.uniform(-1e-6, 1e-6, 20)
        got = backward_error(a, x, b)
        # binary64 inputs are exact rationals, so the oracle is exact
        af = [[Fraction(v) for v in row] for row in a]
        xf = [Fraction(v) for v in x]
        bf = [Fraction(v) for v in b]
        r = [sum(af[i][j] * xf[j] for j in range(20)) - bf[i] for i in range(20)]
        num = max(abs(v) for v in r)
        anorm = max(sum(abs(v) for v in row) for row in af)
        den = anorm * max(abs(v) for v in xf) + max(abs(v) for v in bf)
        want = float(num / den)
        assert abs(got - want) <= 1e-15


class TestSolvePipeline:
    @pytest.mark.parametrize("method", ["tpp", "strict"])
    def test_random_indefinite_converges(self, method):
        spec = GeneratorSpec("random-indefinite", 200, 32, seed=21)
        prob = generate(spec)
        b = np.random.default_rng(1).uniform(-1.0, 1.0, 200)
        rep, x = solve_with_refinement(prob.full, b, method, PivotParams(), p=32)
        assert rep.converged
        assert rep.bwd_err[-1] < REFINE_TOL
        assert len(rep.bwd_err) <= 11

    def test_refinement_nonincreasing_until_stop(self):
        spec = GeneratorSpec("random-indefinite", 150, 24, seed=2)
        prob = generate(spec)
        b = np.random.default_rng(3).uniform(-1.0, 1.0, 150)
        rep, _ = solve_with_refinement(prob.full, b, "tpp", p=24)
        errs = rep.bwd_err
        for a_, b_ in zip(errs, errs[1:]):
            assert b_ <= a_ * (1.0 + 1e-12) or a_ < REFINE_TOL

    def test_delayed_pivot_accounting(self):
        for method in ("tpp", "strict", "relaxed", "restricted"):
            spec = GeneratorSpec("random-indefinite", 120, 40, seed=4)
            prob = generate(spec)
            b = np.random.default_rng(5).uniform(-1.0, 1.0, 120)
            rep, _ = solve_with_refinement(prob.full, b, method, p=40)
            assert rep.nelim_supernode + rep.nelim_root + rep.zero_pivots == 120

    def test_pathological_restricted_growth_reported(self):
        prob = generate(GeneratorSpec("pathological-relaxed", 5, 2,
                                      u=0.01, epsilon=1e-6))
        b = np.ones(5)
        rep, _ = solve_with_refinement(prob.full, b, "restricted",
                                       PivotParams(u=0.01), p=2)
        assert rep.max_abs_l == pytest.approx(2.0 * (100.0 - 1e-6), rel=1e-9)

    def test_zero_pivot_component_flagged(self):
        # a structurally singular system: one variable never appears
        a = np.diag([2.0, 0.0, 3.0])
        b = np.array([2.0, 0.0, 6.0])
        rep, x = solve_with_refinement(a, b, "tpp", p=3)
        assert rep.singular
        assert rep.zero_pivots == 1
        assert x[1] == 0.0
        np.testing.assert_allclose([x[0], x[2]], [1.0, 2.0], rtol=1e-14)

    def test_determinism(self):
        spec = GeneratorSpec("random-indefinite", 90, 16, seed=6)
        prob = generate(spec)
        b = np.random.default_rng(7).uniform(-1.0, 1.0, 90)
        r1, x1 = solve_with_refinement(prob.full, b, "relaxed", p=16)
        r2, x2 = solve_with_refinement(prob.full, b, "relaxed", p=16)
        assert np.array_equal(x1, x2)
        assert r1.bwd_err == r2.bwd_err

    def test_equilibration_scales_back(self):
        spec = GeneratorSpec("random-indefinite", 80, 16, seed=8)
        prob = generate(spec)
        a = prob.full * 1e6  # badly scaled copy
        b = np.random.default_rng(9).uniform(-1.0, 1.0, 80)
        rep, x = solve_with_refinement(a, b, "relaxed", p=16, equilibrate=True)
        assert rep.equilibrated
        assert backward_error(a, x, b) < REFINE_TOL

    def test_ldl_solve_reproduces_direct_factor(self):
        spec = GeneratorSpec("random-indefinite", 60, 12, seed=10)
        prob = generate(spec)
        sf = factor_system(prob.full, 12, "tpp", PivotParams())
        b = np.random.default_rng(11).uniform(-1.0, 1.0, 60)
        x = ldl_solve(sf, b)
        assert backward_error(prob.full, x, b) < 1e-10


class TestReport:
    def _schema(self):
        import importlib.resources as res

        import jsonschema

        text = res.files("pivotkit").joinpath("report_schema.json").read_text()
        return jsonschema.Draft202012Validator(json.loads(text))

    def test_empty_report(self):
        doc = report([])
        assert doc == {"schema": "pivotkit-report/1", "runs": [], "comparison": []}
        self._schema().validate(doc)

    def test_single_run_validates_against_schema(self):
        prob = generate(GeneratorSpec("random-indefinite", 60, 12, seed=12))
        b = np.random.default_rng(13).uniform(-1.0, 1.0, 60)
        rep, _ = solve_with_refinement(prob.full, b, "tpp", p=12,
                                       kind="random-indefinite", seed=12)
        doc = report([rep])
        self._schema().validate(doc)
        assert doc["runs"][0]["method"] == "tpp"

    def test_additional_delays_column(self):
        rows = []
        for seed in range(3):
            prob = generate(GeneratorSpec("random-indefinite", 80, 24, seed=seed))
            b = np.random.default_rng(seed).uniform(-1.0, 1.0, 80)
            for method in ("tpp", "strict"):
                rep, _ = solve_with_refinement(prob.full, b, method, p=24,
                                               kind="random-indefinite", seed=seed)
                rows.append(rep)
        doc = report(rows)
        self._schema().validate(doc)
        by_key = {}
        for r in rows:
            by_key.setdefault(r.seed, {})[r.method] = r
        for c in doc["comparison"]:
            want = by_key[c["seed"]][c["method"]].delayed \
                - by_key[c["seed"]]["tpp"].delayed
            assert c["additional_delays_vs_tpp"] == want

    def test_comparison_table_rows(self):
        prob = generate(GeneratorSpec("random-indefinite", 40, 8, seed=14))
        b = np.random.default_rng(15).uniform(-1.0, 1.0, 40)
        rep, _ = solve_with_refinement(prob.full, b, "tpp", p=8,
                                       kind="random-indefinite", seed=14)
        table = comparison_table(report([rep]))
        assert table[0][0] == "kind"
        assert len(table) == 2
