import csv
import io
import json

import pytest

from pathrev.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_moments_json(capsys):
    code, out, _ = run(capsys, "analyze", "moments", "--n", "10")
    assert code == 0
    assert json.loads(out)["mean"] == "7129/2520"


def test_dist_csv(capsys):
    code, out, _ = run(capsys, "analyze", "dist", "--n", "4", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "k", "p_num", "p_den"]
    assert rows[1:] == [["4", "1", "1", "3"], ["4", "2", "1", "2"], ["4", "3", "1", "6"]]


def test_dist_methods_agree(capsys):
    _, a, _ = run(capsys, "analyze", "dist", "--n", "9")
    _, b, _ = run(capsys, "analyze", "dist", "--n", "9", "--method", "recurrence")
    assert json.loads(a)["probs"] == json.loads(b)["probs"]


def test_stirling(capsys):
    code, out, _ = run(capsys, "analyze", "stirling", "--n", "6")
    assert code == 0 and all(r["ok"] for r in json.loads(out))


def test_bijection_text(capsys):
    code, out, _ = run(capsys, "bijection", "check", "--n", "6")
    assert code == 0 and out.strip() == "OK: 720/720 roundtrips"


def test_bijection_limit(capsys):
    code, _, err = run(capsys, "bijection", "check", "--n", "9")
    assert code == 2 and "n <= 8" in err


def test_queue_exact(capsys):
    code, out, _ = run(capsys, "queue", "eval", "--n", "3", "--lambda", "1/5", "--sigma", "1",
                       "--delta", "1/10", "--exact")
    d = json.loads(out)
    assert code == 0 and d["P"][0] == "125/236" and d["wbar"] == d["wbar_direct_sum"]


def test_simulate_needs_seed(capsys, monkeypatch):
    monkeypatch.delenv("PATHREV_SEED", raising=False)
    code, _, err = run(capsys, "simulate", "--n", "4")
    assert code == 2 and "--seed" in err


def test_usage_error_exit(capsys):
    code, _, _ = run(capsys, "analyze", "nonsense")
    assert code == 2


def test_bad_topology_is_usage(capsys):
    code, _, _ = run(capsys, "simulate", "--n", "5", "--seed", "1", "--topology", "regular:3")
    assert code == 2


def test_simulate_csv_schema(capsys):
    code, out, _ = run(capsys, "simulate", "--n", "4", "--seed", "3", "--requests", "20",
                       "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["request_id", "origin", "messages", "wait_time", "granted_at"]
    assert len(rows) == 21


def test_env_and_config_precedence(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv("PATHREV_SEED", "5")
    monkeypatch.setenv("PATHREV_REQUESTS", "7")
    _, out, _ = run(capsys, "simulate", "--n", "3")
    d = json.loads(out)["config"]
    assert d["seed"] == 5 and d["requests"] == 7
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"requests": 9, "lambda": 0.5}))
    _, out, _ = run(capsys, "simulate", "--n", "3", "--config", str(conf))
    d = json.loads(out)["config"]
    assert d["requests"] == 9 and d["lambda"] == 0.5 and d["seed"] == 5
    _, out, _ = run(capsys, "simulate", "--n", "3", "--config", str(conf), "--requests", "4")
    assert json.loads(out)["config"]["requests"] == 4


def test_replications_independent_of_jobs(capsys):
    base = ["simulate", "--n", "5", "--seed", "2", "--requests", "300", "--replications", "3",
            "--mode", "poisson", "--lambda", "0.4", "--delta", "0.05,0.3"]
    _, a, _ = run(capsys, *base, "--jobs", "1")
    _, b, _ = run(capsys, *base, "--jobs", "3")
    assert a == b
    d = json.loads(a)
    assert [r["seed"] for r in d["replications"]] == [2, 3, 4]


def test_strict_bounds_exit(capsys):
    # a path graph with long jittered delays pushes hop counts past 2D;
    # without --strict-bounds the run still exits 0
    argv = ["simulate", "--n", "16", "--seed", "1", "--requests", "3000",
            "--topology", "sparse:16"]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    viol = json.loads(out)["summary"]["diameter_violations"]
    code, _, _ = run(capsys, *argv, "--strict-bounds")
    assert code == (3 if viol else 0)


@pytest.mark.parametrize("argv", [
    ["analyze", "moments", "--n", "12"],
    ["analyze", "normality", "--n", "50", "--samples", "2000", "--seed", "4"],
    ["queue", "eval", "--n", "6", "--lambda", "0.1", "--sigma", "1", "--delta", "0.2"],
    ["bijection", "check", "--n", "5", "--format", "csv"],
    ["simulate", "--n", "6", "--seed", "9", "--requests", "400", "--mode", "poisson",
     "--delta", "0.05,0.4", "--format", "csv"],
    ["reproduce", "theorem41", "--n", "5,10", "--rho", "0.2,0.8", "--seed", "0"],
])
def test_manifest_replay(capsys, tmp_path, argv):
    out = tmp_path / "result"
    code, _, _ = run(capsys, *argv, "--out", str(out))
    assert code == 0
    man = json.loads((tmp_path / "result.manifest.json").read_text())
    assert man["subcommand"][0] == argv[0] and man["version"]
    code, text, _ = run(capsys, "replay", str(tmp_path / "result.manifest.json"))
    assert code == 0 and json.loads(text)["identical"]


def test_replay_detects_tampering(capsys, tmp_path):
    out = tmp_path / "m.json"
    run(capsys, "analyze", "moments", "--n", "6", "--out", str(out))
    mpath = tmp_path / "m.json.manifest.json"
    man = json.loads(mpath.read_text())
    man["params"]["n"] = 7
    mpath.write_text(json.dumps(man))
    code, _, _ = run(capsys, "replay", str(mpath))
    assert code == 1


def test_reproduce_figures(capsys, tmp_path):
    code, out, _ = run(capsys, "reproduce", "theorem31", "--n", "4,8", "--requests", "3000",
                       "--seed", "1", "--figures", str(tmp_path))
    d = json.loads(out)
    assert sorted(d["figures"]) == ["theorem31_histogram.png", "theorem31_mean_messages.png"]
    assert all((tmp_path / f).stat().st_size > 0 for f in d["figures"])
    code, out, _ = run(capsys, "reproduce", "lemma51", "--n", "16,32", "--runs", "2",
                       "--requests", "200", "--seed", "1", "--figures", str(tmp_path))
    d = json.loads(out)
    assert d["figures"] == ["lemma51_hops.png"] and set(d["fit"]) == {"regular", "sparse"}
