import csv
import json
import math
from fractions import Fraction
from pathlib import Path

import pytest

from qdopt.experiments.cli import main
from qdopt.experiments.config import ConfigError, load_config, parse_seeds
from qdopt.experiments.runner import (
    TRIAL_COLUMNS,
    MissingTrajectory,
    build_instance,
    run_experiment,
    table2,
    verify_bounds,
)
from qdopt.graph import directed_cycle, write_edge_list

F = Fraction


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def test_parse_seeds():
    assert parse_seeds("0-3,10") == [0, 1, 2, 3, 10]
    assert parse_seeds(" 5 ") == [5]
    for bad in ("", "a", "1-b"):
        with pytest.raises(ConfigError):
            parse_seeds(bad)


def test_defaults():
    cfg = load_config()
    assert cfg.algorithm == "alg1" and cfg.seeds == list(range(20))
    assert cfg.graph.n == 20 and cfg.optimizer.alpha == F(3, 25)
    assert cfg.optimizer.c_in == F(4, 3) and cfg.optimizer.c_out == 2 and cfg.optimizer.c_r == 2


def test_ini_and_overrides(tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text(
        "[experiment]\nalgorithm = alg4\nseeds = 1,2\n\n"
        "[graph]\nn = 6\np = 0.5  # denser\n\n"
        "[costs]\nbeta = 1,1,1,2,2,2\ncenter_set = 3\n\n"
        "[optimizer]\nalpha = 0.1\nc_in = 4/3\neps_s1 = inf\npatience = 5\nfreeze_basis = yes\n"
    )
    cfg = load_config(ini, ["optimizer.delta0=0.01", "graph.seed=9"])
    assert cfg.algorithm == "alg4" and cfg.seeds == [1, 2]
    assert cfg.graph.n == 6 and cfg.graph.p == 0.5 and cfg.graph.seed == 9
    assert cfg.costs.beta == [1, 1, 1, 2, 2, 2] and cfg.costs.center_set == [3]
    assert cfg.optimizer.delta0 == F(1, 100) and cfg.optimizer.eps_s1 == math.inf
    assert cfg.optimizer.patience == 5 and cfg.optimizer.freeze_basis is True
    inst = build_instance(cfg, 1)
    assert inst.x_star == 3 and all(c.center == 3 for c in inst.costs)


@pytest.mark.parametrize(
    "overrides,fragment",
    [
        (["experiment.algorithm=alg2"], "unknown algorithm"),
        (["optimizer.bogus=1"], "unknown key"),
        (["nosection.key=1"], "unknown section"),
        (["graph.p=2"], "graph.p"),
        (["costs.beta_set=0,1"], "smooth strongly convex"),
        (["optimizer.alpha=-1"], "step size"),
        (["optimizer.c_r=x"], "bad value"),
        (["justtext"], "section.key=value"),
        (["costs.beta=1,2"], "costs.beta"),
    ],
)
def test_config_errors(overrides, fragment):
    with pytest.raises(ConfigError, match=fragment):
        load_config(None, overrides)


def test_assumption_errors_named(tmp_path):
    cfg = load_config(None, ["optimizer.alpha=5", "experiment.seeds=0", f"experiment.out={tmp_path}"])
    with pytest.raises(ConfigError, match=r"\[step-size bound\]"):
        run_experiment(cfg)
    g = tmp_path / "g.txt"
    g.write_text("n=3\n1 0\n2 1\n")
    cfg = load_config(None, [f"graph.file={g}", "experiment.seeds=0", f"experiment.out={tmp_path}"])
    with pytest.raises(ConfigError, match=r"\[strong connectivity\]"):
        run_experiment(cfg)


def small(tmp_path, name, *extra):
    out = tmp_path / name
    return out, ["simulate", "--seed-list", "0-2", "--out", str(out), "--set", "graph.n=8", *extra]


def test_simulate_outputs(tmp_path):
    out, argv = small(tmp_path, "a", "--algorithm", "alg3", "--trace", "--set", "optimizer.max_outer_steps=25")
    assert main(argv) == 0
    for seed in range(3):
        rows = read_rows(out / f"trial_{seed}.csv")
        assert tuple(rows[0]) == TRIAL_COLUMNS
        assert rows[0]["step"] == "0" and float(rows[0]["e_k"]) == pytest.approx(math.sqrt(8))
        bits = [int(r["bits_step"]) for r in rows]
        assert [int(r["bits_cum"]) for r in rows] == [sum(bits[: k + 1]) for k in range(len(bits))]
        meta = json.loads((out / f"trial_{seed}.json").read_text())
        assert meta["algorithm"] == "alg3" and meta["n"] == 8
        trace = read_rows(out / f"trace_{seed}.csv")
        assert set(trace[0]) == {"step", "round", "node", "y", "z", "M", "m", "sends"}
        assert (out / f"graph_{seed}.txt").exists()
    summary = read_rows(out / "bits_summary.csv")
    assert [r["seed"] for r in summary] == ["0", "1", "2"]


def test_aggregate_is_mean_of_trials(tmp_path):
    out, argv = small(tmp_path, "agg", "--algorithm", "alg3", "--set", "optimizer.eps_s1=inf",
                      "--set", "optimizer.eps_s2=inf")
    assert main(argv) == 0
    trials = [read_rows(out / f"trial_{s}.csv") for s in range(3)]
    agg = read_rows(out / "aggregate.csv")
    for row in agg:
        k = int(row["step"])
        vals = [float(t[k]["e_k"]) for t in trials if len(t) > k]
        assert int(row["n_trials"]) == len(vals)
        assert float(row["mean_e_k"]) == pytest.approx(sum(vals) / len(vals), rel=1e-12)
    # early-terminating trials make the horizon uneven
    assert len(agg) == max(len(t) for t in trials)


def test_parallel_matches_serial(tmp_path):
    out1, argv1 = small(tmp_path, "s", "--algorithm", "alg4")
    out2, argv2 = small(tmp_path, "p", "--algorithm", "alg4", "--jobs", "3")
    assert main(argv1) == 0 and main(argv2) == 0
    for p in sorted(out1.iterdir()):
        assert p.read_bytes() == (out2 / p.name).read_bytes()


def test_graph_file(tmp_path):
    g = tmp_path / "ring.txt"
    write_edge_list(directed_cycle(5), g)
    out = tmp_path / "ring"
    assert main(["simulate", "--seed-list", "0", "--out", str(out), "--set", f"graph.file={g}"]) == 0
    assert json.loads((out / "trial_0.json").read_text())["diameter"] == 4


def test_verify_clean_and_corrupted(tmp_path, capsys):
    out, argv = small(tmp_path, "v", "--set", "optimizer.max_outer_steps=20")
    assert main(argv) == 0
    assert main(["verify", "--in", str(out)]) == 0
    report = verify_bounds(out)
    assert report.ok and report.steps_checked == 60

    path = out / "trial_1.csv"
    rows = read_rows(path)
    delta = float(rows[7]["delta"])
    rows[7]["x_hat"] = repr(float(rows[7]["x_hat"]) + 10 * delta)
    write_rows(path, rows)
    report = verify_bounds(out)
    assert [(c.seed, c.step) for c in report.failures] == [(1, 7)]
    assert main(["verify", "--in", str(out), "--quiet"]) == 2
    assert "seed=1 step=7 envelope=FAIL band=FAIL" in capsys.readouterr().out


def test_verify_empty_trajectory(tmp_path, capsys):
    out, argv = small(tmp_path, "e", "--set", "optimizer.max_outer_steps=0")
    assert main(argv) == 0
    capsys.readouterr()
    assert main(["verify", "--in", str(out)]) == 0
    assert "0 steps checked" in capsys.readouterr().out


def test_missing_and_malformed_trajectories(tmp_path):
    with pytest.raises(MissingTrajectory):
        verify_bounds(tmp_path / "nowhere")
    with pytest.raises(MissingTrajectory):
        verify_bounds(tmp_path)
    assert main(["verify", "--in", str(tmp_path / "nowhere")]) == 3
    assert main(["table2", "--in", str(tmp_path)]) == 3
    (tmp_path / "trial_0.csv").write_text("step,e_k\n0,1\n")
    assert main(["verify", "--in", str(tmp_path)]) == 3  # no metadata file
    (tmp_path / "trial_0.json").write_text("{}")
    assert main(["verify", "--in", str(tmp_path)]) == 3


def test_config_error_exit_code(tmp_path):
    assert main(["simulate", "--set", "optimizer.alpha=abc", "--out", str(tmp_path)]) == 1
    assert main(["simulate", "--config", str(tmp_path / "missing.ini")]) == 3


def test_table2(tmp_path, capsys):
    out, argv = small(tmp_path, "t", "--algorithm", "alg3")
    assert main(argv) == 0
    capsys.readouterr()
    assert main(["table2", "--in", str(out), "--thresholds", "10,0.5"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0].startswith("algorithm,threshold,trials_reached")
    assert (out / "table2.csv").read_text() == text
    cells = table2(out, thresholds=(10.0,))
    # for these seeds the first step already brings the error below 10
    assert cells[0].trials_reached == 3 and cells[0].mean_c_s == 1
    trials = [read_rows(out / f"trial_{s}.csv") for s in range(3)]
    assert cells[0].mean_bits_reference == pytest.approx(float(F("211.88") * 7))
    assert cells[0].mean_bits_measured == pytest.approx(sum(int(t[1]["bits_cum"]) for t in trials) / 3)
