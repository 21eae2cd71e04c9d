import json

import pytest

from identity_salience.cli import main


def run(*args):
    try:
        return main([str(a) for a in args])
    except SystemExit as exc:
        return exc.code


@pytest.fixture(scope="module")
def planted(tmp_path_factory):
    d = tmp_path_factory.mktemp("planted")
    code = run("synth", "--m", 400, "--n", 2000, "--out-degree", 40, "--seed", 1,
               "--homophily", "race=0.8,0.5", "--plant-bridge", "0:gender:Female", "-o", d)
    assert code == 0
    return d


def inputs(d):
    return ["--users", d / "users.tsv", "--edges", d / "edges.tsv", "--categories", d / "categories.tsv"]


def test_synth_deterministic_and_creates_dir(tmp_path):
    a, b = tmp_path / "x" / "a", tmp_path / "y" / "b"
    assert run("synth", "--seed", 7, "--m", 100, "--n", 500, "-o", a) == 0
    assert run("synth", "--seed", 7, "--m", 100, "--n", 500, "-o", b) == 0
    for name in ("users.tsv", "edges.tsv", "categories.tsv", "ground_truth.json", "config-echo.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_synth_usage_errors(tmp_path, capsys):
    assert run("synth", "--m", 0, "--n", 5, "-o", tmp_path) == 2
    assert run("synth", "--m", 5, "--n", 5, "--homophily", "race", "-o", tmp_path) == 2
    assert run("synth", "--m", 5, "--n", 5, "--plant-bridge", "0:gender", "-o", tmp_path) == 2


def test_synth_infeasible(tmp_path, capsys):
    assert run("synth", "--m", 5, "--n", 5, "--homophily", "race=0.5", "-o", tmp_path) == 1
    assert "infeasible" in capsys.readouterr().err


def test_pipeline_outputs(planted, tmp_path):
    out = tmp_path / "out"
    assert run("pipeline", *inputs(planted), "--boot-iters", 2000, "-o", out) == 0
    names = {p.name for p in out.iterdir()}
    assert {"profiles.tsv", "profiles.json", "divergence.json", "divergence.csv",
            "bridges.csv", "config-echo.json"} <= names
    rep = json.loads((out / "divergence.json").read_text())
    race = rep["dimensions"]["race"]
    assert race["mean_diff"] > 0
    assert max(race["corrected_p"].values()) < 0.01
    echo = json.loads((out / "config-echo.json").read_text())
    assert echo["boot_iters"] == 2000 and echo["bonferroni_factor"] == 15
    assert echo["confidence"] == 0.99 and echo["denominator"] == "tagged"
    assert echo["min_audience"] == 5 and echo["top_k"] == 10
    bridges = (out / "bridges.csv").read_text().splitlines()
    assert bridges[0].startswith("influencer_id,dimension,salience_diff")
    women = [r for r in bridges[1:] if ",Women," in r]
    assert women[0].startswith("k000,")
    header = (out / "profiles.tsv").read_text().splitlines()[0]
    assert header == "user_id\tdimension\traw\tego\taudience"


def test_pipeline_same_seed_same_bytes(planted, tmp_path):
    for k, threads in enumerate((1, 3)):
        assert run("pipeline", *inputs(planted), "--boot-iters", 1000, "--threads", threads,
                   "-o", tmp_path / str(k)) == 0
    for name in ("divergence.json", "divergence.csv", "bridges.csv", "profiles.tsv", "profiles.json"):
        assert (tmp_path / "0" / name).read_bytes() == (tmp_path / "1" / name).read_bytes()


def test_bridges_command_and_targets(planted, tmp_path):
    out = tmp_path / "b"
    assert run("bridges", *inputs(planted), "--bridge-target", "Asian=race:Asian",
               "--no-require-excess", "--top-k", 3, "-o", out) == 0
    assert not (out / "divergence.json").exists()
    rows = (out / "bridges.csv").read_text().splitlines()
    assert len(rows) == 4 and all(",Asian," in r for r in rows[1:])
    assert json.loads((out / "config-echo.json").read_text())["require_excess"] is False


def test_malformed_edge_exit_1(planted, tmp_path, capsys):
    edges = tmp_path / "edges.tsv"
    lines = (planted / "edges.tsv").read_text().splitlines()
    lines[4] = lines[4] + "\textra"
    edges.write_text("\n".join(lines) + "\n")
    code = run("pipeline", "--users", planted / "users.tsv", "--edges", edges, "-o", tmp_path / "o")
    assert code == 1
    err = capsys.readouterr().err
    assert "edges.tsv:5:" in err


def test_missing_file_exit_1(tmp_path, capsys):
    assert run("ingest-check", "--users", tmp_path / "nope", "--edges", tmp_path / "nope") == 1
    assert "error" in capsys.readouterr().err


def test_ingest_check(planted, capsys):
    assert run("ingest-check", *inputs(planted)) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["influencers"] == 400 and doc["audience"] == 2000
    assert doc["tagged"]["race"] == 400


def test_resample_check(planted, tmp_path):
    out = tmp_path / "r"
    assert run("resample-check", *inputs(planted), "--k-samples", 1, "--boot-iters", 1000, "-o", out) == 0
    doc = json.loads((out / "robustness.json").read_text())
    race = doc["dimensions"]["race"]
    assert doc["sample_size"] == 1000
    assert race["spread"] == 0.0 and race["sign_agreement"] == 1.0
    assert (out / "config-echo.json").exists()


def test_resample_sample_size_too_large(planted, tmp_path):
    assert run("resample-check", *inputs(planted), "--sample-size", 5000, "-o", tmp_path) == 2


def test_boot_iters_floor(planted, tmp_path):
    assert run("pipeline", *inputs(planted), "--boot-iters", 10, "-o", tmp_path) == 2
