import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from repalign import __version__, cli, io, metrics, stats
from repalign.core import EmbeddingAgent


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_json(path):
    return json.loads(path.read_text())


def read_csv(path):
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert run("gen", "--seed", 5, "--out", out, "--n-per-class", 6, "--noise-scales", "0.3,2") == 0
    return out


class TestGen:
    def test_files(self, generated):
        names = {p.name for p in generated.iterdir()}
        assert {"embedding.csv", "labels.csv", "noise_0.csv", "noise_1.csv", "isometry_0.csv", "inverted_similarity.csv", "gen.json", "gen.config"} <= names

    def test_roundtrip(self, generated):
        emb = io.read_embedding_csv(generated / "embedding.csv")
        labels = io.read_labels_csv(generated / "labels.csv", emb.stimuli.ids)
        assert emb.n == 24 and np.bincount(labels).tolist() == [6, 6, 6, 6]
        summary = read_json(generated / "gen.json")
        inv = next(m for m in summary["members"] if m["agent_id"] == "inverted")
        ref = EmbeddingAgent(emb)
        back = io.read_agent_csv(generated / inv["file"])
        assert metrics.alignment_report(ref, back).triplet_alignment == 0.0

    def test_report_equals_library_call(self, generated, tmp_path):
        out = tmp_path / "a"
        assert run("align", generated / "embedding.csv", generated / "noise_1.csv", "--out", out, "--tie-mode", "include") == 0
        ref = EmbeddingAgent(io.read_embedding_csv(generated / "embedding.csv"))
        member = EmbeddingAgent(io.read_embedding_csv(generated / "noise_1.csv"))
        want = metrics.alignment_report(ref, member).to_dict()
        got = read_json(out / "align.json")["pairs"][0]["datasets"][0]
        assert got == want
        listed = next(m for m in read_json(generated / "gen.json")["members"] if m["agent_id"] == "noise_1")
        assert listed["triplet_alignment"] == want["triplet"]


class TestAlign:
    def test_same_file_twice(self, generated, tmp_path):
        f = generated / "embedding.csv"
        assert run("align", f, f, "--out", tmp_path) == 0
        row = read_csv(tmp_path / "align.csv")[0]
        assert (float(row["triplet"]), float(row["pearson"]), float(row["spearman"])) == (1.0, 1.0, 1.0)

    def test_row_permuted_copy(self, generated, tmp_path):
        src = (generated / "noise_0.csv").read_text().splitlines()
        body = src[1:]
        np.random.default_rng(0).shuffle(body)
        perm = tmp_path / "perm.csv"
        perm.write_text("\n".join([src[0]] + body) + "\n")
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("align", generated / "embedding.csv", generated / "noise_0.csv", "--out", a) == 0
        assert run("align", generated / "embedding.csv", perm, "--out", b) == 0
        ra, rb = read_csv(a / "align.csv"), read_csv(b / "align.csv")
        for x, y in zip(ra, rb):
            assert {k: x[k] for k in metrics.REPORT_COLUMNS} == {k: y[k] for k in metrics.REPORT_COLUMNS}

    def test_id_mismatch_lists_symmetric_difference(self, generated, tmp_path, capsys):
        other = tmp_path / "other.csv"
        lines = (generated / "noise_0.csv").read_text().splitlines()
        lines[1] = "zz" + lines[1][lines[1].index(","):]
        other.write_text("\n".join(lines) + "\n")
        assert run("align", generated / "embedding.csv", other, "--out", tmp_path / "o") == 2
        err = capsys.readouterr().err
        assert "zz" in err and "c0_0" in err

    def test_missing_file(self, generated, tmp_path, capsys):
        assert run("align", generated / "embedding.csv", tmp_path / "absent.csv", "--out", tmp_path / "o") == 2
        assert "absent.csv" in capsys.readouterr().err

    def test_malformed_line_number(self, generated, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,x0,x1\na,1,2\nb,3,oops\nc,5,6\n")
        assert run("align", bad, bad, "--out", tmp_path / "o") == 2
        assert "bad.csv:3" in capsys.readouterr().err
        table = tmp_path / "t.csv"
        table.write_text("alignment,performance\n1,2\n2,x\n3,5\n")
        assert run("stats", "--input", table, "--out", tmp_path / "o") == 2
        assert "t.csv:3" in capsys.readouterr().err

    def test_similarity_input_defaults_to_exclude(self, generated, tmp_path):
        assert run("align", generated / "embedding.csv", generated / "inverted_similarity.csv", "--out", tmp_path) == 0
        assert read_json(tmp_path / "align.json")["config"]["tie_mode"] == "exclude"

    def test_multi_dataset_average(self, generated, tmp_path):
        e, n0, n1 = generated / "embedding.csv", generated / "noise_0.csv", generated / "noise_1.csv"
        assert run("align", f"{e}+{e}", f"{n0}+{n1}", "--out", tmp_path) == 0
        rows = read_csv(tmp_path / "align.csv")
        per = [float(r["triplet"]) for r in rows if r["dataset"] != "mean"]
        mean = [float(r["triplet"]) for r in rows if r["dataset"] == "mean"][0]
        assert mean == pytest.approx(np.mean(per))

    def test_sampled_requires_seed(self, generated, tmp_path):
        f = generated / "embedding.csv"
        assert run("align", f, f, "--mode", "sampled", "--out", tmp_path) == 2
        assert run("align", f, f, "--mode", "sampled", "--seed", 1, "--out", tmp_path) == 0

    def test_needs_two_agents(self, generated, tmp_path):
        assert run("align", generated / "embedding.csv", "--out", tmp_path) == 2


class TestSimulate:
    def test_noiseless_beats_prior(self, tmp_path):
        assert run("simulate-teaching", "--seed", 0, "--epsilons", "0.0", "--trials", 20, "--out", tmp_path) == 0
        rows = read_csv(tmp_path / "ushape.csv")
        assert list(rows[0]) == ["epsilon", "mean_error", "std_err", "trials", "budget"]
        summary = read_json(tmp_path / "simulate_teaching.json")
        assert float(rows[0]["mean_error"]) < summary["prior_error"]

    def test_u_shape_outcome_reported(self, tmp_path):
        assert run("simulate-teaching", "--seed", 0, "--epsilons", "0.05,0.5,0.95", "--trials", 10, "--budget", 100, "--out", tmp_path) == 0
        assert read_json(tmp_path / "simulate_teaching.json")["u_shape"]["holds"] is True

    @pytest.mark.parametrize("flags", [["--epsilons", "x"], ["--epsilons", "1.5"], ["--decoder", "magic"], ["--budget", "0"]])
    def test_invalid_flags(self, tmp_path, flags, capsys):
        with pytest.raises(SystemExit) as e:
            code = run("simulate-teaching", "--seed", 0, "--out", tmp_path, "--trials", 2, *flags)
            raise SystemExit(code)
        assert e.value.code == 2

    def test_seed_required(self, tmp_path):
        assert run("simulate-teaching", "--out", tmp_path) == 2


class TestStatsCommand:
    def test_matches_library(self, tmp_path):
        rng = np.random.default_rng(0)
        z = rng.normal(size=30)
        x, y = z + rng.normal(size=30), z + 0.5 * rng.normal(size=30)
        p = tmp_path / "t.csv"
        io.write_table_csv(p, ("alignment", "performance", "covariate"), [{"alignment": a, "performance": b, "covariate": c} for a, b, c in zip(x, y, z)])
        assert run("stats", "--input", p, "--covariate", "covariate", "--out", tmp_path / "o") == 0
        got = read_json(tmp_path / "o" / "stats.json")
        assert got["partial"] == stats.partial_correlation(x, y, z).to_dict()
        assert got["pearson"] == stats.pearson(x, y).to_dict()
        assert got["spearman"] == stats.spearman(x, y).to_dict()

    def test_unknown_column(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("a,b\n1,2\n2,3\n3,5\n")
        assert run("stats", "--input", p, "--out", tmp_path / "o") == 2


class TestRobustnessCommand:
    def test_unchanged_centroids_give_zero(self, generated, tmp_path):
        cents = tmp_path / "c.csv"
        cents.write_text("id,x0,x1\nk0,-3.0,0.1\nk1,3.0,-0.2\n")
        assert run("robustness", "--check", "domain-shift", "--embedding", generated / "embedding.csv", "--centroids", cents, "--shifted", cents, "--out", tmp_path / "o") == 0
        assert read_json(tmp_path / "o" / "robustness.json")["sensitivity"] == 0.0

    def test_adversarial_table(self, tmp_path):
        assert run("robustness", "--seed", 0, "--trials", 50, "--epsilons", "0.1,0.4", "--out", tmp_path) == 0
        rows = read_csv(tmp_path / "robustness.csv")
        assert list(rows[0]) == ["epsilon", "formula_expectation", "empirical_mean", "empirical_stderr"]

    def test_missing_centroids(self, generated, tmp_path, capsys):
        assert run("robustness", "--check", "domain-shift", "--embedding", generated / "embedding.csv", "--centroids", tmp_path / "none.csv", "--out", tmp_path / "o") == 2
        assert "none.csv" in capsys.readouterr().err


class TestConfig:
    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("seed = 1\nbogus = 3\n")
        assert run("gen", "--config", cfg, "--out", tmp_path / "o") == 2
        assert "bogus" in capsys.readouterr().err

    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("seed = 1\nn_per_class = 3\nk = 2\n")
        assert run("gen", "--config", cfg, "--k", 3, "--out", tmp_path / "o") == 0
        conf = read_json(tmp_path / "o" / "gen.json")["config"]
        assert conf["k"] == 3 and conf["n_per_class"] == 3 and conf["seed"] == 1

    def test_report_header(self, generated):
        s = read_json(generated / "gen.json")
        assert s["version"] == __version__ and s["seed"] == 5 and "out" not in s["config"]

    def test_inputs_carry_digests(self, generated, tmp_path):
        f = generated / "embedding.csv"
        assert run("align", f, f, "--out", tmp_path) == 0
        inputs = read_json(tmp_path / "align.json")["inputs"]
        assert inputs[0]["digest"] == io.file_digest(f)

    def test_writes_only_inside_out(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        before = set(tmp_path.iterdir())
        assert run("gen", "--seed", 2, "--n-per-class", 3, "--out", tmp_path / "o") == 0
        assert set(tmp_path.iterdir()) - before == {tmp_path / "o"}


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "repalign", "gen", "--seed", "1", "--n-per-class", "3", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "embedding.csv").exists()
