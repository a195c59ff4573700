import json

import numpy as np
import pytest

from ecocip import codebook as cb
from ecocip.cli import derive_seed, main, read_config
from ecocip.solve import brute_force


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path, monkeypatch):
    # runs without --out drop their manifest in the working directory
    monkeypatch.chdir(tmp_path)


def run(*argv):
    return main([str(a) for a in argv])


def load_json(path):
    return json.loads(path.read_text())


@pytest.fixture(scope="module")
def toy_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("toy")
    assert run("toy", "--k", 4, "--n", 30, "--seed", 2, "--out", d / "train.csv", "--test-out", d / "test.csv") == 0
    assert run("standard", "--k", 4, "--out", d / "ova.json") == 0
    return d


class TestCodebookCommands:
    def test_exhaustive_k5(self, tmp_path):
        out = tmp_path / "m.csv"
        assert run("exhaustive", "--k", 5, "--out", out) == 0
        M = cb.load(out)
        assert M.shape == (5, 15)
        assert M.column(0).tolist() == [1, -1, -1, -1, -1] and M.column(14).tolist() == [1, 1, 1, 1, -1]

    def test_exhaustive_k10(self, tmp_path):
        out = tmp_path / "m.json"
        assert run("exhaustive", "--k", 10, "--out", out) == 0
        assert cb.load(out).shape == (10, 511)

    def test_bad_k(self, tmp_path, capsys):
        assert run("exhaustive", "--k", 1, "--out", tmp_path / "m.csv") == 2
        assert "--k" in capsys.readouterr().err

    def test_standard_random_balance(self, tmp_path):
        assert run("standard", "--k", 4, "--kind", "one-vs-one", "--out", tmp_path / "o.json") == 0
        assert cb.load(tmp_path / "o.json").shape == (4, 6)
        assert run("random", "--k", 6, "--L", 8, "--trials", 50, "--out", tmp_path / "r.json") == 0
        assert cb.validate(cb.load(tmp_path / "r.json")) == []
        assert run("balance", "--k", 5, "--tau", 1, "--out", tmp_path / "b.json") == 0
        assert cb.load(tmp_path / "b.json").L == 10

    def test_unknown_flag(self):
        assert run("exhaustive", "--bogus") == 2

    def test_version(self, capsys):
        assert run("--version") == 0
        assert "ecocip" in capsys.readouterr().out


class TestStats:
    @pytest.mark.parametrize("k,rho,expected", [(10, 3, 11475), (5, 1, 0), (15, 5, 12040770)])
    def test_counts(self, tmp_path, k, rho, expected):
        out = tmp_path / "s.json"
        assert run("stats", "--k", k, "--rho", rho, "--cover-max-edges", 20000, "--out", out) == 0
        rep = load_json(out)
        assert rep["n_infeasible"] == expected == rep["n_infeasible_closed_form"]

    def test_cover_reported(self, tmp_path):
        out = tmp_path / "s.json"
        run("stats", "--k", 10, "--rho", 3, "--out", out)
        rep = load_json(out)
        assert rep["cover_size"] <= 1400 and rep["reduction_factor"] == pytest.approx(11475 / rep["cover_size"])

    def test_classify_and_cover(self, tmp_path):
        edges = tmp_path / "g.txt"
        assert run("classify", "--k", 6, "--rho", 2, "--edges", edges, "--out", tmp_path / "c.json") == 0
        assert run("cover", "--edges", edges, "--out", tmp_path / "cover.json") == 0
        assert load_json(tmp_path / "cover.json")["cliques"]

    def test_bad_rho(self):
        assert run("stats", "--k", 5, "--rho", 5) == 2


class TestDesign:
    def test_local_search_k10(self, tmp_path):
        rep = tmp_path / "r.json"
        code = run("design", "--k", 10, "--L", 20, "--rho", 3, "--method", "local-search",
                   "--time-limit", 20, "--out", tmp_path / "m.json", "--report", rep)
        doc = load_json(rep)
        assert code in (0, 4) and doc["objective"] >= 9
        assert doc["n_infeasible"] == 11475
        assert cb.min_row_distance(cb.load(tmp_path / "m.json")) == doc["objective"]

    def test_exact_k5(self, tmp_path):
        rep = tmp_path / "r.json"
        assert run("design", "--k", 5, "--L", 10, "--rho", 1, "--method", "exact", "--out", tmp_path / "m.csv",
                   "--report", rep) == 0
        doc = load_json(rep)
        assert doc["objective"] == brute_force(cb.generate_exhaustive(5), 10, 1).objective_value
        assert doc["status"] == "optimal" and doc["gap_abs"] == 0

    def test_over_constrained(self, tmp_path):
        rep = tmp_path / "r.json"
        code = run("design", "--k", 10, "--L", 20, "--rho", 9, "--time-limit", 10, "--report", rep)
        doc = load_json(rep)
        assert code in (3, 4)
        assert len(doc["selected"]) < 20 and any("short-selection" in w for w in doc["warnings"])

    def test_node_limit_exit(self, tmp_path):
        code = run("design", "--k", 10, "--L", 20, "--rho", 3, "--method", "exact", "--node-limit", 5,
                   "--report", tmp_path / "r.json")
        assert code == 4 and load_json(tmp_path / "r.json")["status"] == "feasible-time-limit"

    def test_highs(self, tmp_path):
        rep = tmp_path / "r.json"
        assert run("design", "--k", 5, "--L", 6, "--rho", 2, "--method", "highs", "--report", rep) == 0
        assert load_json(rep)["objective"] == brute_force(cb.generate_exhaustive(5), 6, 2).objective_value

    def test_build_and_solve(self, tmp_path):
        lp = tmp_path / "m.lp"
        assert run("build-model", "--k", 5, "--L", 6, "--rho", 2, "--formulation", "ip2", "--out", lp,
                   "--stats", tmp_path / "st.json") == 0
        assert "Subject To" in lp.read_text()
        assert run("solve", "--model", lp, "--out", tmp_path / "sol.json") == 0
        assert load_json(tmp_path / "sol.json")["objective"] == brute_force(cb.generate_exhaustive(5), 6, 2).objective_value

    def test_export_distribution(self, tmp_path):
        assert run("export", "--k", 4, "--L", 5, "--rho", 1, "--formulation", "ip2", "--objective", "distribution",
                   "--target", 3, "--out", tmp_path / "d.lp") == 0
        assert "Minimize" in (tmp_path / "d.lp").read_text()


class TestEvalAttack:
    def test_eval(self, toy_files, tmp_path):
        out = tmp_path / "e.json"
        assert run("eval", "--train", toy_files / "train.csv", "--test", toy_files / "test.csv",
                   "--codebook", toy_files / "ova.json", "--learner", "logistic", "--epochs", 50, "--out", out) == 0
        rep = load_json(out)
        assert set(rep["accuracy"]) == {"hamming", "scores-raw", "scores-normalized"}
        assert np.array(rep["confusion_matrix"]).sum() == rep["n_test"]

    def test_attack_zero_row(self, toy_files, tmp_path):
        out = tmp_path / "a.json"
        assert run("attack", "--train", toy_files / "train.csv", "--test", toy_files / "test.csv",
                   "--codebook", toy_files / "ova.json", "--learner", "logistic", "--epochs", 50,
                   "--epsilons", "0,0.2,0.5", "--steps", 10, "--fgsm", "--csv", tmp_path / "a.csv", "--out", out) == 0
        rep = load_json(out)
        sweep = rep["sweep"]
        assert sweep[0]["epsilon"] == 0 and sweep[0]["adversarial_accuracy"] == rep["clean_accuracy"]
        accs = [r["adversarial_accuracy"] for r in sweep]
        assert accs == sorted(accs, reverse=True)
        assert all(f["adversarial_accuracy"] >= p["adversarial_accuracy"] for f, p in zip(rep["fgsm"], sweep))
        assert (tmp_path / "a.csv").read_text().splitlines()[0] == "epsilon,adversarial_accuracy"

    def test_nearest_centroid_attack_rejected(self, toy_files, capsys):
        code = run("attack", "--train", toy_files / "train.csv", "--codebook", toy_files / "ova.json",
                   "--learner", "nearest-centroid", "--epsilons", "0.1")
        assert code == 2

    def test_missing_label_column(self, tmp_path, toy_files, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x1\n0.5\n1.5\n")
        assert run("eval", "--train", bad, "--codebook", toy_files / "ova.json") == 2
        assert "label" in capsys.readouterr().err

    def test_bad_row_line_number(self, tmp_path, toy_files, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,x2,label\n0.5,1,0\n1.5,oops,1\n")
        assert run("eval", "--train", bad, "--codebook", toy_files / "ova.json") == 2
        assert "line 3" in capsys.readouterr().err

    def test_bad_epsilons(self, toy_files):
        assert run("attack", "--train", toy_files / "train.csv", "--codebook", toy_files / "ova.json",
                   "--learner", "logistic", "--epochs", 5, "--epsilons", "a,b") == 2


class TestReproducibility:
    def test_manifest_and_replay(self, tmp_path):
        out = tmp_path / "toy.csv"
        assert run("toy", "--k", 3, "--n", 10, "--seed", 7, "--deterministic", "--out", out) == 0
        manifest = tmp_path / "toy.csv.manifest.json"
        doc = load_json(manifest)
        assert doc["seed"] == 7 and doc["derived_seeds"]["toy"] == derive_seed(7, "toy")
        assert doc["deterministic"] is True and str(out) in doc["artifacts"]
        before = out.read_bytes()
        assert run("replay", manifest) == 0
        assert out.read_bytes() == before

    def test_replay_detects_mismatch(self, tmp_path):
        out = tmp_path / "m.json"
        run("exhaustive", "--k", 4, "--out", out, "--manifest", tmp_path / "man.json")
        doc = load_json(tmp_path / "man.json")
        doc["artifacts"][str(out)] = "0" * 64
        (tmp_path / "man.json").write_text(json.dumps(doc))
        assert run("replay", tmp_path / "man.json") == 1

    def test_deterministic_design_report(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for r in (a, b):
            run("design", "--k", 6, "--L", 8, "--rho", 2, "--deterministic", "--report", r)
        assert a.read_bytes() == b.read_bytes()
        assert load_json(a)["elapsed_s"] is None

    def test_seeds_differ_by_label(self):
        assert derive_seed(0, "toy") != derive_seed(0, "split")
        assert derive_seed(1, "toy") == derive_seed(1, "toy")

    def test_global_flags_either_side(self, tmp_path):
        assert run("--deterministic", "exhaustive", "--k", 3, "--out", tmp_path / "a.csv") == 0
        assert run("exhaustive", "--deterministic", "--k", 3, "--out", tmp_path / "b.csv") == 0


class TestConfig:
    def test_file_and_override(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("# design defaults\nk = 5\nL = 10\nrho = 1\nmethod = exact\n")
        assert read_config(conf)["method"] == "exact"
        rep = tmp_path / "r.json"
        assert run("--config", conf, "design", "--report", rep) == 0
        assert load_json(rep)["L"] == 10
        assert run("--config", conf, "design", "--L", 4, "--report", rep) == 0
        assert load_json(rep)["L"] == 4

    def test_env_var(self, tmp_path, monkeypatch):
        conf = tmp_path / "env.conf"
        conf.write_text("k = 4\n")
        monkeypatch.setenv("ECOCIP_CONFIG", str(conf))
        out = tmp_path / "m.csv"
        assert run("exhaustive", "--out", out) == 0
        assert cb.load(out).shape == (4, 7)

    def test_bad_config(self, tmp_path):
        conf = tmp_path / "bad.conf"
        conf.write_text("k 5\n")
        assert run("--config", conf, "exhaustive") == 2
