"""End-to-end tests driving the CLI through main()."""

import json

import pytest

from matroidmatch.algorithms import load_trace, run_mobvc, run_random_arrival_greedy, save_trace
from matroidmatch.cli import main, parse_fn_spec, parse_seeds
from matroidmatch.constants import ONE_PLUS_ALPHA
from matroidmatch.errors import ParseError
from matroidmatch.instances import Arrival, Instance, load, save
from matroidmatch.submodular import Cardinality, GroundSet


@pytest.fixture
def edge_file(tmp_path):
    g = GroundSet(1)
    inst = Instance("edge", 1, Cardinality(g), [Arrival(0, (0,))])
    path = tmp_path / "edge.json"
    save(inst, path)
    return inst, str(path)


class TestGenerate:
    def test_triangular(self, tmp_path, capsys):
        out = tmp_path / "tri20.json"
        assert main(["generate", "triangular", "--n", "20", "--out", str(out)]) == 0
        inst = load(out)
        assert inst.n_offline == 20
        assert inst.m_online == 20

    def test_random_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        argv = ["generate", "random", "--n", "8", "--m", "10", "--p", "0.4",
                "--seed", "7"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_bad_probability(self, tmp_path, capsys):
        rc = main(["generate", "random", "--n", "4", "--m", "4", "--p", "1.5"])
        assert rc == 2
        assert "outside [0, 1]" in capsys.readouterr().err

    def test_stdout_json(self, capsys):
        assert main(["generate", "random", "--n", "3", "--m", "2"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["n_offline"] == 3

    def test_family_flag(self, tmp_path):
        out = tmp_path / "p.json"
        rc = main(["generate", "random", "--n", "4", "--m", "4",
                   "--f", "partition:0,0,1,1:1,2", "--out", str(out)])
        assert rc == 0
        assert load(out).f.family == "partition_budget"

    def test_triangular_rejects_family(self, capsys):
        rc = main(["generate", "triangular", "--n", "4", "--f", "uniform:2"])
        assert rc == 2

    def test_missing_m(self, capsys):
        assert main(["generate", "random", "--n", "4"]) == 2


class TestFlagParsers:
    def test_fn_specs(self):
        assert parse_fn_spec("cardinality", 3).family == "cardinality"
        assert parse_fn_spec("uniform:2", 3).k == 2
        assert parse_fn_spec("weighted:1,2,3:2.5", 3).family == "weighted_threshold"
        assert parse_fn_spec("coverage:5", 3).family == "explicit_table"

    def test_fn_spec_errors(self):
        with pytest.raises(ParseError):
            parse_fn_spec("frobnicate", 3)
        with pytest.raises(ParseError):
            parse_fn_spec("uniform:x", 3)
        with pytest.raises(ParseError):
            parse_fn_spec("partition:0,0:1,2", 3)
        with pytest.raises(ParseError):
            parse_fn_spec("weighted:1,2:5", 3)

    def test_seed_lists(self):
        assert parse_seeds("0,2,5-8") == [0, 2, 5, 6, 7, 8]
        assert parse_seeds("-3") == [-3]
        with pytest.raises(ParseError):
            parse_seeds("8-5")
        with pytest.raises(ParseError):
            parse_seeds(",")


class TestRun:
    def test_obvc_line(self, edge_file, capsys):
        _, path = edge_file
        assert main(["run", path, "--algorithm", "obvc"]) == 0
        line = capsys.readouterr().out.strip()
        assert line == "obvc,edge,0,1,1,1"

    def test_trace_roundtrip(self, edge_file, tmp_path, capsys):
        _, path = edge_file
        tr = tmp_path / "t.json"
        assert main(["run", path, "--algorithm", "mobm-pd", "--trace", str(tr)]) == 0
        trace = load_trace(tr)
        assert trace.algorithm == "mobm-pd"

    def test_greedy_trials_summary(self, tmp_path, capsys):
        out = tmp_path / "i.json"
        main(["generate", "random", "--n", "4", "--m", "4", "--seed", "3",
              "--out", str(out)])
        rc = main(["run", str(out), "--algorithm", "greedy-ra",
                   "--model", "permutation", "--trials", "5"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("# ratio over 5 trials: min=")

    def test_trials_refuse_trace(self, edge_file, tmp_path, capsys):
        _, path = edge_file
        rc = main(["run", path, "--algorithm", "greedy-ra", "--trials", "3",
                   "--trace", str(tmp_path / "t.json")])
        assert rc == 2

    def test_missing_file(self, capsys):
        assert main(["run", "no-such.json", "--algorithm", "obvc"]) == 2


class TestVerify:
    def make_pair(self, tmp_path, algorithm="mobvc"):
        ipath = tmp_path / "i.json"
        main(["generate", "random", "--n", "5", "--m", "6", "--seed", "11",
              "--out", str(ipath)])
        tpath = tmp_path / "t.json"
        main(["run", str(ipath), "--algorithm", algorithm, "--trace", str(tpath)])
        return str(ipath), str(tpath)

    @pytest.mark.parametrize("alg", ["obvc", "mobvc", "mobm-pd", "greedy-ra"])
    def test_clean_traces_pass(self, tmp_path, capsys, alg):
        ipath, tpath = self.make_pair(tmp_path, alg)
        assert main(["verify", tpath, "--instance", ipath]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert "PASS replay-match" in out

    def test_corrupted_x_fails(self, tmp_path, capsys):
        ipath, tpath = self.make_pair(tmp_path, "mobm-pd")
        data = json.loads(open(tpath).read())
        u, v, val = data["final"]["x"][0]
        data["final"]["x"][0] = [u, v, val + 0.25]
        open(tpath, "w").write(json.dumps(data))
        assert main(["verify", tpath, "--instance", ipath]) == 1
        out = capsys.readouterr().out
        assert f"FAIL replay-match: x[{u},{v}]" in out

    def test_mismatched_instance(self, tmp_path, capsys):
        ipath, tpath = self.make_pair(tmp_path)
        other = tmp_path / "other.json"
        main(["generate", "triangular", "--n", "5", "--out", str(other)])
        assert main(["verify", tpath, "--instance", str(other)]) == 2

    def test_json_report(self, tmp_path, capsys):
        ipath, tpath = self.make_pair(tmp_path)
        capsys.readouterr()  # drop the run line make_pair printed
        assert main(["verify", tpath, "--instance", ipath, "--json"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["ok"] is True
        assert {c["name"] for c in rep["checks"]} >= {"replay-match", "cover-feasible"}


class TestAudit:
    def test_waterfilling_trace_passes(self, tmp_path, capsys):
        ipath = tmp_path / "i.json"
        main(["generate", "triangular", "--n", "6", "--out", str(ipath)])
        tpath = tmp_path / "t.json"
        main(["run", str(ipath), "--algorithm", "mobvc", "--trace", str(tpath)])
        assert main(["audit", str(tpath), "--instance", str(ipath)]) == 0
        out = capsys.readouterr().out
        assert "PASS round-charges" in out
        assert "PASS global-budget" in out

    def test_greedy_trace_rejected(self, edge_file, tmp_path, capsys):
        inst, ipath = edge_file
        tpath = tmp_path / "t.json"
        save_trace(run_random_arrival_greedy(inst), tpath)
        assert main(["audit", str(tpath), "--instance", ipath]) == 2

    def test_corrupt_round_fails(self, tmp_path, capsys):
        # flattening a region to zero charge breaks the per-round bound
        ipath = tmp_path / "i.json"
        main(["generate", "random", "--n", "2", "--m", "1", "--p", "1",
              "--out", str(ipath)])
        tpath = tmp_path / "t.json"
        main(["run", str(ipath), "--algorithm", "mobvc", "--trace", str(tpath)])
        data = json.loads(open(tpath).read())
        for reg in data["rounds"][0]["regions"]:
            reg["new_height"] = reg["old_height"]
        open(tpath, "w").write(json.dumps(data))
        assert main(["audit", str(tpath), "--instance", str(ipath)]) == 1
        assert "FAIL round-charge: v=0" in capsys.readouterr().out

    def test_corrupt_budget_fails(self, tmp_path, capsys):
        # duplicating the only charge region doubles the total past alpha
        ipath = tmp_path / "i.json"
        main(["generate", "random", "--n", "2", "--m", "2", "--p", "1",
              "--f", "uniform:1", "--out", str(ipath)])
        tpath = tmp_path / "t.json"
        main(["run", str(ipath), "--algorithm", "mobvc", "--trace", str(tpath)])
        data = json.loads(open(tpath).read())
        regions = data["rounds"][0]["regions"]
        assert regions, "expected the first round to pour water"
        regions.append(dict(regions[0]))
        open(tpath, "w").write(json.dumps(data))
        assert main(["audit", str(tpath), "--instance", str(ipath)]) == 1
        assert "FAIL global-budget" in capsys.readouterr().out


class TestSweep:
    def test_rows_and_bound(self, tmp_path):
        out = tmp_path / "s.csv"
        rc = main(["sweep", "--kind", "random", "--n", "6", "--m", "6",
                   "--seeds", "1-5", "--algorithms", "obvc,mobvc",
                   "--repro", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "algorithm,instance,seed,primal,dual,opt,ratio,ms"
        assert len(lines) == 11
        for line in lines[1:]:
            ratio = float(line.split(",")[6])
            assert ratio <= ONE_PLUS_ALPHA + 1e-6

    def test_repro_reruns_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["sweep", "--kind", "random", "--n", "5", "--m", "5",
                "--seeds", "1,2", "--algorithms", "mobvc,mobm-pd", "--repro"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_header_only(self, capsys):
        rc = main(["sweep", "--kind", "triangular", "--n", "4",
                   "--seeds", "0", "--algorithms", ""])
        assert rc == 0
        assert capsys.readouterr().out == "algorithm,instance,seed,primal,dual,opt,ratio,ms\n"

    def test_unknown_algorithm(self, capsys):
        rc = main(["sweep", "--kind", "triangular", "--n", "4",
                   "--seeds", "0", "--algorithms", "simplex"])
        assert rc == 2
