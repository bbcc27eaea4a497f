"""Command-line interface: subcommands, file outputs and exit codes."""

import json
import os
import subprocess
import sys

import numpy as np

from pivotkit import GeneratorSpec, generate
from pivotkit.cli import main
from pivotkit.mmio import write_dense_vector, write_symmetric


def run_cli(args, env_extra=None):
    env = dict(os.environ)
    env.pop("PIVOTKIT_SEED", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "pivotkit.cli", *args],
                          capture_output=True, text=True, env=env)


class TestCommModel:
    def test_prints_costs(self, capsys):
        assert main(["commmodel", "--scheme", "strict",
                     "--n", "64", "--p", "8", "--P", "8"]) == 0
        out = capsys.readouterr().out
        assert "msgs = 4" in out
        assert "O(log n)" in out

    def test_bad_input_exits_one(self):
        r = run_cli(["commmodel", "--scheme", "strict",
                     "--n", "8", "--p", "3", "--P", "2"])
        assert r.returncode == 1
        assert "even" in r.stderr


class TestSimulate:
    def test_counters_match_model(self, capsys):
        assert main(["simulate", "--method", "strict", "--P", "8",
                     "--n", "64", "--p", "8"]) == 0
        out = capsys.readouterr().out
        assert "match" in out


class TestFactor:
    def test_writes_json_and_csv(self, tmp_path, capsys):
        out = tmp_path / "rep.json"
        assert main(["factor", "--n", "80", "--p", "16", "--repeat", "2", "--jobs", "2",
                     "--out", str(out)]) == 0
        capsys.readouterr()
        doc = json.loads(out.read_text())
        assert doc["schema"] == "pivotkit-report/1"
        assert len(doc["runs"]) == 8  # 2 instances x 4 methods
        csv_path = tmp_path / "rep.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0].startswith("kind,seed")
        assert len(lines) == 9

    def test_schema_validates(self, tmp_path, capsys):
        import importlib.resources as res

        import jsonschema

        out = tmp_path / "rep.json"
        assert main(["factor", "--n", "50", "--p", "10", "--method",
                     "tpp,strict", "--out", str(out)]) == 0
        capsys.readouterr()
        schema = json.loads(res.files("pivotkit")
                            .joinpath("report_schema.json").read_text())
        jsonschema.validate(json.loads(out.read_text()), schema)

    def test_supernode_only_kind(self, tmp_path, capsys):
        out = tmp_path / "rep.json"
        assert main(["factor", "--n", "32", "--p", "8",
                     "--kind", "all-2x2-accept", "--method", "tpp",
                     "--out", str(out)]) == 0
        capsys.readouterr()
        doc = json.loads(out.read_text())
        assert doc["runs"][0]["delayed"] == 0


class TestSolve:
    def test_solve_from_files(self, tmp_path, capsys):
        prob = generate(GeneratorSpec("random-indefinite", 40, 8, seed=3))
        mtx = tmp_path / "sys.mtx"
        rhs = tmp_path / "b.mtx"
        write_symmetric(prob.full, str(mtx))
        write_dense_vector(np.ones(40), str(rhs))
        sol = tmp_path / "x.mtx"
        assert main(["solve", "--matrix", str(mtx), "--rhs", str(rhs),
                     "--method", "strict", "--p", "8",
                     "--solution", str(sol)]) == 0
        out = capsys.readouterr().out
        assert "converged" in out
        from pivotkit.mmio import read_dense_vector

        x = read_dense_vector(str(sol))
        r = prob.full @ x - 1.0
        assert np.abs(r).max() < 1e-8


class TestSeedsAndExitCodes:
    def test_env_seed_overrides_flag(self, tmp_path):
        outs = []
        for _ in range(2):
            out = tmp_path / f"r{len(outs)}.json"
            r = run_cli(["factor", "--n", "30", "--p", "6", "--method", "tpp",
                         "--seed", str(len(outs) * 100), "--out", str(out)],
                        env_extra={"PIVOTKIT_SEED": "5"})
            assert r.returncode == 0
            doc = json.loads(out.read_text())
            doc["runs"][0]["timings"] = None
            outs.append(doc)
        assert outs[0] == outs[1]

    def test_usage_error_exits_one(self):
        r = run_cli(["factor", "--n", "10"])  # missing --p
        assert r.returncode == 1

    def test_selftest_exits_zero(self):
        r = run_cli(["selftest"])
        assert r.returncode == 0
        assert "FAIL" not in r.stdout
