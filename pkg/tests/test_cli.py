import csv
import json
import math

import numpy as np
import pytest

from knngate.cli import main
from knngate.config import ConfigError, dump_config, load_config, parse_config_text
from knngate.memory import MemoryStore
from knngate.report import CSV_COLUMNS

from conftest import CONFIGS

SMALL = """\
schema_version = 1
experiment = "gate_limit"
master_seed = 11

[scenario]
weights = [[2.0, 0.0], [-1.0, 1.5], [-1.0, -1.5]]
offsets = [0.0, 0.0, 0.0]

[scenario.q0]
kind = "contaminated"
alpha = 0.5

[sweep]
n_grid = [300]
beta = 0.6
reps = 5
queries = [[0.25, 0.1]]
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL)
    return path


@pytest.fixture
def store_path(tmp_path):
    path = tmp_path / "mem.bin"
    MemoryStore([[0.0, 0.0], [0.1, 0.0], [1.0, 1.0]], [1, 1, 2], 2).save(path)
    return path


def gate(capsys, *args):
    code = main(["gate", *map(str, args)])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gate_stays_off_when_retriever_misses_a_label(capsys, store_path):
    code, out, _ = gate(capsys, "--memory", store_path, "--query", "0,0", "--k", 2,
                        "--p-true", "0.9,0.1", "--q0", "0.5,0.5")
    assert code == 0
    rec = json.loads(out)
    assert rec["lambda"] == 0.0 and rec["rhat"] == [1.0, 0.0]
    assert rec["ellr"] == "inf" and rec["regime"] == "C"


def test_gate_with_finite_losses(capsys, store_path):
    code, out, _ = gate(capsys, "--memory", store_path, "--query", "0,0", "--k", 3,
                        "--p-true", "0.7,0.3", "--q0", "0.4,0.6", "--mode", "soft")
    rec = json.loads(out)
    assert code == 0 and rec["lambda"] == 1.0
    assert rec["neighbors"] == [0, 1, 2]
    assert rec["w_fact"] == pytest.approx((1 + math.exp(-0.01) + math.exp(-2)) / 3)


def test_gate_k_too_large(capsys, store_path):
    code, out, err = gate(capsys, "--memory", store_path, "--query", "0,0", "--k", 4,
                          "--p-true", "0.5,0.5", "--q0", "0.5,0.5")
    assert code == 2 and out == ""
    assert "1 <= k <= n = 3" in err


def test_gate_missing_memory(capsys, tmp_path):
    code, _, err = gate(capsys, "--memory", tmp_path / "nope", "--query", "0", "--k", 1,
                        "--p-true", "1", "--q0", "1")
    assert code == 2 and "cannot read" in err


def test_gate_uses_config_scenario(capsys, tmp_path, small_config):
    mem = tmp_path / "m.bin"
    assert main(["memory", "--config", str(small_config), "--n", "500", "--seed", "1",
                 "--out", str(mem)]) == 0
    code, out, _ = gate(capsys, "--memory", mem, "--query", "0.25,0.1", "--k", 30,
                        "--config", small_config, "--zeta", 1)
    assert code == 0 and json.loads(out)["k"] == 30


def simulate(tmp_path, config, name, *extra):
    out = tmp_path / name
    assert main(["simulate", "--config", str(config), "--out", str(out), *extra]) == 0
    return out


def test_simulate_reruns_are_byte_identical(tmp_path, small_config):
    a = simulate(tmp_path, small_config, "a")
    b = simulate(tmp_path, small_config, "b", "--threads", "3")
    assert (a / "report.csv").read_bytes() == (b / "report.csv").read_bytes()
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_simulate_single_cell_csv(tmp_path, small_config):
    out = simulate(tmp_path, small_config, "a")
    with open(out / "report.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert rows[0]["n"] == "300" and rows[0]["k"] == "31" and rows[0]["reps"] == "5"


def test_csv_header_is_stable(tmp_path, small_config):
    out = simulate(tmp_path, small_config, "a")
    header = (out / "report.csv").read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    assert header.startswith("experiment,n,k,query,x,reps,support_distance,dev_mean,")
    assert header.endswith(",target,target_delta_x,limit_l1,l1_bound")


def test_manifest_round_trip(tmp_path, small_config):
    out = simulate(tmp_path, small_config, "a", "--seed", "5")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["resolved_config"]["master_seed"] == 5
    assert manifest["knn_backend"] in ("cython", "python")
    again = simulate(tmp_path, out / "manifest.json", "b")
    assert (out / "report.csv").read_bytes() == (again / "report.csv").read_bytes()


def test_simulate_echo_json(tmp_path, small_config, capsys):
    simulate(tmp_path, small_config, "a", "--format", "json")
    payload = json.loads(capsys.readouterr().out)
    assert list(payload["experiments"]) == ["gate_limit"]


def test_missing_key_is_reported(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(SMALL.replace("n_grid = [300]\n", ""))
    code = main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "missing required key 'sweep.n_grid'" in capsys.readouterr().err


def test_parse_error_names_the_line(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(SMALL.replace("reps = 5", "reps = = 5"))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "line 16" in capsys.readouterr().err


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key 'sweep.repz'"):
        parse_config_text(SMALL.replace("reps = 5", "reps = 5\nrepz = 1"))


def test_invalid_query_exit_code(tmp_path, capsys):
    path = tmp_path / "q.toml"
    path.write_text(SMALL.replace("[[0.25, 0.1]]", "[[3.0, 0.0]]"))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "outside the memory support" in capsys.readouterr().err


def test_dump_config_round_trip():
    cfg = load_config(CONFIGS / "acceptance_gate.toml")
    assert parse_config_text(dump_config(cfg)) == cfg


def test_query_count_samples_queries():
    cfg = parse_config_text(SMALL.replace("queries = [[0.25, 0.1]]", "query_count = 3"))
    assert len(cfg.queries) == 3
    assert all(np.linalg.norm(q) <= 1.0 for q in cfg.queries)


def test_plot_draws_reference_lines(tmp_path, small_config):
    out = simulate(tmp_path, small_config, "a")
    svg_path = tmp_path / "p.svg"
    assert main(["plot", str(out / "report.csv"), "--out", str(svg_path)]) == 0
    svg = svg_path.read_text()
    assert svg.startswith("<svg") and svg.count('class="point"') == 1
    assert 'class="target"' in svg


def test_plot_unknown_metric(tmp_path, small_config, capsys):
    out = simulate(tmp_path, small_config, "a")
    code = main(["plot", str(out / "report.csv"), "--out", str(tmp_path / "p.svg"),
                 "--metric", "nope"])
    assert code == 2 and "unknown metric" in capsys.readouterr().err


def test_plot_empty_report(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    path.write_text(",".join(CSV_COLUMNS) + "\n")
    assert main(["plot", str(path), "--out", str(tmp_path / "p.svg")]) == 2
    assert "no data rows" in capsys.readouterr().err
