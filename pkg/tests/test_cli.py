import json
import math
import shutil
import subprocess
import sys

import pytest

from gaussmax import cli, covmodels, maxstats


def run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


T21 = {"theorem": "T21-gumbel-mixed", "model": {"family": "b1", "alpha": 1, "r": 0.5},
       "T": 100, "reps": 200, "r": 0.5, "seed": 3}


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv(cli.SEED_ENV, raising=False)


# --- lawtable -------------------------------------------------------------------

def test_lawtable_gumbel_abs(capsys):
    code, out, _ = run(capsys, "lawtable", "--law", "gumbel-abs", "--from", "-2", "--to", "6", "--step", "0.5")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,cdf" and len(lines) == 18
    rows = dict(tuple(map(float, ln.split(","))) for ln in lines[1:])
    assert abs(rows[0.0] - 0.135335) <= 1e-6
    assert lines[1].startswith("-2.0,") and lines[-1].startswith("6.0,")


def test_lawtable_file_has_lf_and_dot_decimal(capsys, tmp_path):
    out = tmp_path / "law.csv"
    code, _, _ = run(capsys, "lawtable", "--law", "mixed-gumbel", "--r", "0.5", "--from", "0", "--to", "1",
                     "--step", "0.25", "--out", str(out))
    assert code == 0
    raw = out.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert all("," in ln and ";" not in ln for ln in raw.decode("utf-8").splitlines())


def test_lawtable_usage_errors(capsys):
    assert run(capsys, "lawtable", "--law", "gumbel", "--from", "1", "--to", "0", "--step", "0.1")[0] == 2
    assert run(capsys, "lawtable", "--law", "frechet", "--from", "0", "--to", "1", "--step", "0.1")[0] == 2


# --- experiment -----------------------------------------------------------------

@pytest.mark.usefixtures("private_cache")
def test_experiment_twice_identical_summary(capsys, tmp_path):
    conf = write_json(tmp_path / "t21.json", T21)
    outs = []
    for _ in range(2):
        maxstats.clear_cache()
        code, out, _ = run(capsys, "experiment", "--config", conf, "--threads", "1")
        assert code in (0, 1)
        d = json.loads(out)
        d.pop("wall_ms")
        outs.append(json.dumps(d, sort_keys=True))
    assert outs[0] == outs[1]
    assert {"theorem", "ks", "reps", "T", "seed"} <= set(json.loads(outs[0]))


def test_experiment_outputs(capsys, tmp_path):
    conf = write_json(tmp_path / "a4.json", {"theorem": "A4-gumbel", "model": {"family": "weak", "alpha": 1},
                                             "T": 50, "reps": 200, "ks_tol": 1.0})
    csv, js = tmp_path / "o.csv", tmp_path / "o.json"
    code, out, _ = run(capsys, "experiment", "--config", conf, "--out-csv", str(csv), "--out-json", str(js))
    assert code == 0
    assert csv.read_text().splitlines()[0] == "x,empirical_cdf,theoretical_cdf,abs_diff"
    assert json.loads(js.read_text()) == json.loads(out)


def test_experiment_gate_failure_exit_1(capsys, tmp_path):
    conf = write_json(tmp_path / "a4.json", {"theorem": "A4-gumbel", "model": {"family": "weak", "alpha": 1},
                                             "T": 50, "reps": 200, "ks_tol": 0.0})
    assert run(capsys, "experiment", "--config", conf)[0] == 1


def test_experiment_typo_key(capsys, tmp_path):
    bad = dict(T21, repz=4000)
    code, _, err = run(capsys, "experiment", "--config", write_json(tmp_path / "bad.json", bad))
    assert code == 2 and "repz" in err


@pytest.mark.parametrize("mutate,needle", [
    (lambda d: d.pop("reps"), "reps"),
    (lambda d: d.pop("T"), "T"),
    (lambda d: d.pop("r"), "r"),
    (lambda d: d["model"].update(rr=1), "rr"),
    (lambda d: d.update(grid={"a": 0.25, "step": 0.1}), "grid"),
    (lambda d: d.update(theorem="A4-gumbel", r=None) or d.pop("r"), "needs"),
])
def test_experiment_config_errors(capsys, tmp_path, mutate, needle):
    d = json.loads(json.dumps(T21))
    mutate(d)
    code, _, err = run(capsys, "experiment", "--config", write_json(tmp_path / "c.json", d))
    assert code == 2 and needle in err


def test_experiment_requires_config(capsys):
    assert run(capsys, "experiment")[0] == 2


def test_grid_and_H_keys(tmp_path):
    d = dict(T21, grid={"step": 0.01}, H_alpha=1.0)
    c = cli.experiment_config(d)
    assert c.grid_step == 0.01 and c.H_source == "classical" and c.H == 1.0
    c = cli.experiment_config(dict(T21, grid={"a": 0.1}, H_alpha="grid"))
    assert c.grid_a == 0.1 and c.H_source == "grid"


# --- seed precedence -------------------------------------------------------------

def sim_seed(capsys, conf, *flags):
    code, out, _ = run(capsys, "simulate", "--config", conf, *flags)
    assert code == 0
    return json.loads(out)["seed"]


def test_seed_precedence(capsys, tmp_path, monkeypatch):
    base = {"family": "weak", "alpha": 1, "T": 2, "step": 0.5}
    no_seed = write_json(tmp_path / "a.json", base)
    with_seed = write_json(tmp_path / "b.json", dict(base, seed=5))
    assert sim_seed(capsys, no_seed) == 0
    assert sim_seed(capsys, with_seed) == 5
    monkeypatch.setenv(cli.SEED_ENV, "7")
    assert sim_seed(capsys, with_seed) == 7
    assert sim_seed(capsys, with_seed, "--seed", "9") == 9


def test_seed_validation(capsys, tmp_path, monkeypatch):
    conf = write_json(tmp_path / "a.json", {"family": "weak", "alpha": 1, "T": 2, "step": 0.5})
    assert run(capsys, "simulate", "--config", conf, "--seed", "-1")[0] == 2
    assert run(capsys, "simulate", "--config", conf, "--seed", str(2 ** 64))[0] == 2
    assert sim_seed(capsys, conf, "--seed", str(2 ** 64 - 1)) == 2 ** 64 - 1
    monkeypatch.setenv(cli.SEED_ENV, "abc")
    code, _, err = run(capsys, "simulate", "--config", conf)
    assert code == 2 and cli.SEED_ENV in err


def test_seed_changes_path(capsys):
    args = ("simulate", "--family", "weak", "--alpha", "1", "--T", "5", "--step", "0.1")
    a = json.loads(run(capsys, *args, "--seed", "1")[1])
    b = json.loads(run(capsys, *args, "--seed", "1")[1])
    c = json.loads(run(capsys, *args, "--seed", "2")[1])
    assert a == b and a["max_abs"] != c["max_abs"]


# --- simulate / pickands / validate-model ---------------------------------------

def test_simulate_writes_path(capsys, tmp_path):
    out = tmp_path / "p.csv"
    code, js, _ = run(capsys, "simulate", "--family", "b1", "--alpha", "1", "--r", "0.5", "--T", "10",
                      "--step", "0.5", "--out", str(out), "--seed", "4")
    assert code == 0
    lines = out.read_text().splitlines()
    v = [float(ln.split(",")[1]) for ln in lines[1:]]
    assert len(v) == 21 and json.loads(js)["max_abs"] == pytest.approx(max(abs(x) for x in v), abs=0)


def test_simulate_cholesky_matches_shape(capsys):
    code, js, _ = run(capsys, "simulate", "--family", "weak", "--alpha", "2", "--T", "3", "--step", "0.5",
                      "--backend", "cholesky")
    assert code == 0 and json.loads(js)["n"] == 7


def test_simulate_config_unknown_key(capsys, tmp_path):
    conf = write_json(tmp_path / "s.json", {"family": "weak", "alpha": 1, "T": 2, "stp": 0.5})
    code, _, err = run(capsys, "simulate", "--config", conf)
    assert code == 2 and "stp" in err


def test_pickands_output(capsys, tmp_path):
    csv = tmp_path / "h.csv"
    code, out, _ = run(capsys, "pickands", "--alpha", "1", "--reps", "2000", "--seed", "1", "--csv", str(csv))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "lambda,H_lambda,ci" and len(lines) == 5
    assert lines[-1].startswith("H_hat,")
    assert csv.read_text().splitlines() == lines[:4]
    assert [float(ln.split(",")[0]) for ln in lines[1:4]] == [1.0, 2.0, 3.0]


def test_pickands_bad_lambdas(capsys):
    assert run(capsys, "pickands", "--alpha", "1", "--lambdas", "1,x")[0] == 2
    assert run(capsys, "pickands", "--alpha", "1", "--lambdas", "1,2", "--reps", "1000")[0] == 2


def test_validate_model(capsys):
    code, out, _ = run(capsys, "validate-model", "--family", "b2", "--alpha", "1")
    d = json.loads(out)
    assert code == 0 and d["status"] == "polya" and d["regime"] == covmodels.STRONG_INFINITE
    code, out, _ = run(capsys, "validate-model", "--family", "weak", "--alpha", "1")
    assert code == 0 and json.loads(out)["regime"] == covmodels.BERMAN


def test_validate_model_not_a_correlation(capsys, tmp_path):
    tab = tmp_path / "t.csv"
    tab.write_text("lag,value\n0,1\n1,-0.9\n2,-0.9\n3,-0.9\n")
    code, out, _ = run(capsys, "validate-model", "--family", "table", "--alpha", "1", "--table", str(tab),
                       "--grid-step", "1", "--t-max", "3")
    assert code == 1 and json.loads(out)["status"] == "not-a-correlation"


def test_no_subcommand_and_bad_flag(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "lawtable", "--bogus")[0] == 2


def test_console_script_entry_point(tmp_path):
    exe = shutil.which("gaussmax")
    cmd = [exe] if exe else [sys.executable, "-m", "gaussmax.cli"]
    res = subprocess.run(cmd + ["lawtable", "--law", "gumbel", "--from", "0", "--to", "0", "--step", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert float(res.stdout.splitlines()[1].split(",")[1]) == pytest.approx(math.exp(-1), rel=1e-15)
