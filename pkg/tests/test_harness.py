import csv
import io
import json
from pathlib import Path

import pytest

from expstein.errors import ConfigError, ExpSteinError
from expstein.harness import (ROW_FIELDS, load, loads, parse_config, run_experiment, set_path,
                              sweep, write_outputs)
from expstein.harness.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

RENYI = """
[run]
experiment_id = "renyi-geometric"
reps = 20000
seed = 1

[model]
kind = "random-sum"
n = { family = "geometric-from-1", params = [0.1] }
x = { family = "point-mass", params = [1.0] }

[bounds]
requests = ["random-sum"]
"""


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parse_errors():
    with pytest.raises(ConfigError):
        loads("not toml [")
    with pytest.raises(ConfigError):
        loads("[run]\nexperiment_id = 'x'\n")
    with pytest.raises(ConfigError):
        loads(RENYI.replace("reps = 20000", "reps = 0"))
    with pytest.raises(ConfigError):
        loads(RENYI.replace("seed = 1", "seed = -1"))
    with pytest.raises(ConfigError) as exc:
        run_experiment(loads(RENYI.replace('"random-sum"]', '"pattern"]')))
    assert exc.value.code == "config-parse-error"


def test_renyi_row():
    res = run_experiment(loads(RENYI))
    oracle = [r for r in res.rows if r.metric == "dW" and r.distance_method != "empirical"]
    assert oracle and oracle[0].bound_value == pytest.approx(0.1, abs=1e-15)
    assert all(r.dominance_ok for r in res.rows) and res.ok


def test_pattern_row():
    cfg = load(CONFIGS / "pattern-head-run.toml")
    cfg = parse_config(set_path(cfg.raw, "run.reps", 20000))
    res = run_experiment(cfg)
    assert len(res.rows) == 1
    r = res.rows[0]
    assert r.bound_value == 0.625 and r.metric == "dK" and r.distance_method == "empirical"
    assert r.dominance_ok


def test_empty_requests_write_only_samples(tmp_path):
    cfg = loads(RENYI.replace('requests = ["random-sum"]', "requests = []"))
    res = run_experiment(cfg)
    assert res.rows == []
    written = write_outputs(res, tmp_path / "out.csv")
    assert [p.name for p in written] == ["out.samples.csv"]
    assert (tmp_path / "out.samples.csv").read_text().startswith("replicate,value\n")


def test_csv_columns_and_dominance_recompute(tmp_path):
    write_outputs(run_experiment(loads(RENYI)), tmp_path / "r.csv")
    text = (tmp_path / "r.csv").read_text()
    assert text.splitlines()[0] == ",".join(ROW_FIELDS)
    for row in _rows(text):
        hw = float(row["mc_halfwidth"]) if row["mc_halfwidth"] else 0.0
        ok = float(row["distance_value"]) <= float(row["bound_value"]) + 3 * hw
        assert row["dominance_ok"] == ("true" if ok else "false")
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["experiment_id"] == "renyi-geometric"
    assert all("terms" in r["bound"] for r in report["rows"])


@pytest.mark.parametrize("name", ["renyi-geometric", "hitting-two-state", "geometric-zero-sum"])
def test_byte_identical_across_threads(tmp_path, name):
    cfg = load(CONFIGS / f"{name}.toml")
    cfg = parse_config(set_path(cfg.raw, "run.reps", 20000))
    for t in (1, 3):
        write_outputs(run_experiment(cfg, threads=t), tmp_path / f"t{t}" / "o.csv")
    for f in ("o.csv", "o.json", "o.samples.csv"):
        assert (tmp_path / "t1" / f).read_bytes() == (tmp_path / "t3" / f).read_bytes()


def test_sweep_bound_equals_p():
    cfg = loads(RENYI)
    res = sweep(cfg, "model.n.params.0", [0.2, 0.1, 0.05])
    rows = _rows(res.csv())
    for row in rows:
        if row["metric"] == "dW":
            assert float(row["bound_value"]) == pytest.approx(float(row["model.n.params.0"]), abs=1e-15)
    assert res.ok and "loglog_slope" not in rows[0]


def test_single_value_sweep_matches_run():
    cfg = loads(RENYI)
    res = sweep(cfg, "model.n.params.0", [0.1])
    single = run_experiment(cfg)
    assert [r.csv_cells() for r in res.results[0].rows] == [r.csv_cells() for r in single.rows]


def test_yaglom_sweep_has_slopes():
    cfg = load(CONFIGS / "yaglom-geometric.toml")
    cfg = parse_config(set_path(cfg.raw, "run.reps", 2000))
    res = sweep(cfg, "model.n", [10, 20, 40, 80])
    rows = _rows(res.csv())
    exact = [r for r in rows if r["distance_method"] != "empirical"]
    assert exact and all(-1.25 <= float(r["loglog_slope"]) <= -0.75 for r in exact)


def test_bad_sweep_path():
    with pytest.raises(ConfigError):
        sweep(loads(RENYI), "model.nope", [1])


def test_module_errors_carry_experiment_id():
    bad = RENYI.replace('x = { family = "point-mass", params = [1.0] }',
                        'x = { family = "point-mass", params = [2.0] }').replace(
        '"random-sum"]', '"random-sum-nbue"]')
    with pytest.raises(ExpSteinError) as exc:
        run_experiment(loads(bad))
    assert "[renyi-geometric]" in str(exc.value)


@pytest.mark.parametrize("name", sorted(p.stem for p in CONFIGS.glob("*.toml")))
def test_shipped_configs_dominate(name):
    cfg = load(CONFIGS / f"{name}.toml")
    reps = 2000 if name.startswith("yaglom") else 10000
    res = run_experiment(parse_config(set_path(cfg.raw, "run.reps", reps)))
    assert res.rows and res.ok


# -- command line ------------------------------------------------------------------

def test_cli_verify_and_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(RENYI)
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v.csv"), "--reps", "5000"]) == 0
    assert (tmp_path / "v.csv").exists() and (tmp_path / "v.json").exists()


def test_cli_failing_row_gives_exit_one(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(RENYI + '\n[bounds.random-sum]\nmu = 10.0\nsup_mu_i = 1.0\ne_x_gap = 0.0\ne_nm_gap = 0.0\n')
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v.csv")]) == 1


def test_cli_simulate(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(RENYI)
    out = tmp_path / "s.csv"
    assert main(["simulate", "random-sum", "--config", str(cfg), "--reps", "10", "--seed", "3",
                 "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert len(rows) == 10 and set(rows[0]) == {"replicate", "value"}


def test_cli_bound(tmp_path, capsys):
    inp = tmp_path / "i.toml"
    inp.write_text('p = 0.5\nk = 3\nkind = "head-run"\n')
    assert main(["bound", "pattern", "--inputs", str(inp)]) == 0
    assert json.loads(capsys.readouterr().out)[0]["value"] == 0.625


def test_cli_stein_check(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["stein", "check", "--a-grid", "1,2", "--eps-grid", "0,0.5", "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert {r["status"] for r in rows} <= {"pass", "n/a"}


def test_cli_dist_info(capsys):
    assert main(["dist", "info", "uniform", "0", "2"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["aging_class"] == "NBUE" and info["mean"] == pytest.approx(1.0)


def test_cli_errors(tmp_path, capsys):
    assert main(["dist", "info", "cauchy", "1"]) == 2
    assert "unknown-family" in capsys.readouterr().err
    assert main(["verify", "--config", str(tmp_path / "missing.toml")]) == 2
    assert main(["bound", "random-sum", "--set", "p=0.1"]) == 2
    assert "accepted inputs: mu" in capsys.readouterr().err


def test_cli_plot(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = tmp_path / "c.toml"
    cfg.write_text(RENYI)
    sw = tmp_path / "sw.csv"
    assert main(["sweep", "--config", str(cfg), "--param", "model.n.params.0", "--values", "0.2,0.1",
                 "--reps", "2000", "--out", str(sw)]) == 0
    assert main(["plot", "sweep", str(sw), "--out", str(tmp_path / "sw.png")]) == 0
    assert (tmp_path / "sw.png").stat().st_size > 0
