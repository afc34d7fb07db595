"""CLI, runner, reporting: exit codes, determinism, manifest coverage."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from gna.harness import ExperimentSpec, run_experiment
from gna.harness.cli import main
from gna.harness.exports import read_matrix
from gna.harness import reporting, runner
from gna.history import RunHistory


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    """One small limited-regime experiment shared by the read-only tests."""
    out = tmp_path_factory.mktemp("runs")
    rc = main(
        [
            "run",
            "--problem",
            "xorsat",
            "--n",
            "8",
            "--seeds",
            "0,1",
            "--solver",
            "sa,gna-sa",
            "--budget",
            "25",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    return out


# --------------------------------------------------------------- generate


def test_generate_is_byte_deterministic(tmp_path):
    a = tmp_path / "a.dimacs"
    b = tmp_path / "b.dimacs"
    for p in (a, b):
        rc = main(["generate", "--problem", "3sat", "--n", "10", "--seed", "3", "--out", str(p)])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()


def test_generate_unknown_problem_is_usage_error(tmp_path, capsys):
    rc = main(["generate", "--problem", "tsp", "--out", str(tmp_path / "x")])
    capsys.readouterr()
    assert rc == 2


def test_generate_requires_out(capsys):
    rc = main(["generate", "--problem", "3sat"])
    assert rc == 2
    assert "--out" in capsys.readouterr().err


# -------------------------------------------------------------------- run


def test_run_writes_expected_files(run_dir):
    csvs = sorted(p.name for p in run_dir.glob("*.csv"))
    assert csvs == [
        "xorsat_n8_gna-sa_seed0.csv",
        "xorsat_n8_gna-sa_seed1.csv",
        "xorsat_n8_sa_seed0.csv",
        "xorsat_n8_sa_seed1.csv",
    ]
    # checkpoints only for model-based solvers
    npzs = sorted(p.name for p in run_dir.glob("*.npz"))
    assert npzs == ["xorsat_n8_gna-sa_seed0.npz", "xorsat_n8_gna-sa_seed1.npz"]
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert len(manifest["runs"]) == 4
    assert all(e["status"] == "ok" for e in manifest["runs"])
    assert manifest["spec"]["regime"] == "limited"


def test_rerun_is_deterministic_apart_from_wall_clock(run_dir, tmp_path):
    rc = main(
        [
            "run",
            "--problem",
            "xorsat",
            "--n",
            "8",
            "--seeds",
            "0,1",
            "--solver",
            "sa,gna-sa",
            "--budget",
            "25",
            "--out",
            str(tmp_path),
        ]
    )
    assert rc == 0
    for p in run_dir.glob("*.csv"):
        h1 = RunHistory.from_csv(p)
        h2 = RunHistory.from_csv(tmp_path / p.name)
        for col in ("m", "f", "best_f", "beta"):
            assert np.array_equal(h1.column(col), h2.column(col)), (p.name, col)


def test_worker_fanout_matches_sequential(tmp_path, monkeypatch):
    spec = dict(problem="xorsat", sizes=(8,), seeds=(0, 1), solvers=("sa",))
    seq = ExperimentSpec(out=tmp_path / "seq", **spec)
    run_experiment(seq)
    monkeypatch.setenv("GNA_WORKERS", "2")
    par = ExperimentSpec(out=tmp_path / "par", **spec)
    manifest, n_failed = run_experiment(par)
    assert n_failed == 0
    assert manifest["workers"] == 2
    for p in (tmp_path / "seq").glob("*.csv"):
        h1 = RunHistory.from_csv(p)
        h2 = RunHistory.from_csv(tmp_path / "par" / p.name)
        for col in ("m", "f", "best_f", "beta"):
            assert np.array_equal(h1.column(col), h2.column(col))


def test_run_failure_is_recorded_not_raised(tmp_path, monkeypatch):
    def boom(kind, n, seed=0):
        raise RuntimeError("generator exploded")

    monkeypatch.setattr(runner, "generate", boom)
    spec = ExperimentSpec(
        problem="xorsat", sizes=(8,), seeds=(0,), solvers=("sa",), out=tmp_path
    )
    manifest, n_failed = run_experiment(spec)
    assert n_failed == 1
    entry = manifest["runs"][0]
    assert entry["status"] == "failed"
    assert "generator exploded" in entry["error"]
    assert "traceback" in entry


def test_unlimited_plain_sa_is_usage_error(tmp_path, capsys):
    rc = main(
        [
            "run",
            "--problem",
            "xorsat",
            "--regime",
            "unlimited",
            "--solver",
            "sa",
            "--out",
            str(tmp_path),
        ]
    )
    assert rc == 2
    assert "unlimited" in capsys.readouterr().err


def test_manifest_covers_every_spec_field(tmp_path):
    base = dict(
        problem="xorsat",
        sizes=(8,),
        seeds=(0,),
        solvers=("sa", "gna-sa"),
        regime="limited",
        budget=30,
        max_steps=None,
        beta_min=None,
        beta_upper=None,
    )
    perturbed = [
        dict(base, problem="3sat"),
        dict(base, sizes=(8, 10)),
        dict(base, seeds=(0, 1)),
        dict(base, solvers=("sa",)),
        dict(base, regime="unlimited", solvers=("gna-pt",)),
        dict(base, budget=31),
        dict(base, max_steps=7),
        dict(base, beta_min=0.05),
        dict(base, beta_upper=50.0),
    ]
    blob0 = json.dumps(
        runner.manifest_dict(ExperimentSpec(out=tmp_path, **base), []), sort_keys=True
    )
    for kw in perturbed:
        blob = json.dumps(
            runner.manifest_dict(ExperimentSpec(out=tmp_path, **kw), []), sort_keys=True
        )
        assert blob != blob0, kw


# ------------------------------------------------------------------ report


def _synthetic_run_dir(tmp_path, finals_by_seed):
    """Run dir with hand-built histories whose final best values are given."""
    for seed, finals in finals_by_seed.items():
        h = RunHistory()
        for i, f in enumerate(finals, start=1):
            h.append(i, f, 1.0, 0.0)
        h.to_csv(tmp_path / f"toy_n5_sa_seed{seed}.csv")
    return tmp_path


def test_report_summary_matches_hand_math(tmp_path):
    # finals: 3.0 and 1.0 -> mean 2.0, population std 1.0, min 1.0
    _synthetic_run_dir(tmp_path, {0: [5.0, 3.0], 1: [2.0, 1.0]})
    written = reporting.write_report(tmp_path)
    assert "summary.csv" in written
    with open(tmp_path / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    row = rows[0]
    assert row["problem"] == "toy" and row["solver"] == "sa"
    assert float(row["mean_final_best_f"]) == 2.0
    assert float(row["std_final_best_f"]) == 1.0
    assert float(row["min_final_best_f"]) == 1.0
    assert row["runs"] == "2"


def test_report_single_run_has_zero_std(tmp_path):
    _synthetic_run_dir(tmp_path, {0: [4.0, 2.5]})
    reporting.write_report(tmp_path)
    with open(tmp_path / "summary.csv") as fh:
        row = next(csv.DictReader(fh))
    assert float(row["std_final_best_f"]) == 0.0


def test_report_empty_dir_exits_1(tmp_path, capsys):
    rc = main(["report", str(tmp_path)])
    assert rc == 1
    assert "no run histories" in capsys.readouterr().err


def test_report_on_real_runs(run_dir, tmp_path):
    rc = main(["report", str(run_dir), "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "summary.csv").exists()
    assert (tmp_path / "best_curve_xorsat_n8.svg").exists()
    # manifest marks the regime, so the x axis is labeled in queries
    svg = (tmp_path / "best_curve_xorsat_n8.svg").read_text()
    assert "queries" in svg


def test_scaling_fit_recovers_known_slope(tmp_path):
    ns = [10, 20, 40]
    med = [2.0 * n**2.5 for n in ns]
    slope, intercept = reporting.fit_loglog_slope(ns, med)
    assert slope == pytest.approx(2.5, abs=1e-12)
    assert np.exp(intercept) == pytest.approx(2.0, rel=1e-10)
    with pytest.raises(ValueError):
        reporting.fit_loglog_slope([10], [5.0])
    with pytest.raises(ValueError):
        reporting.fit_loglog_slope([10, 20], [0.0, 5.0])


def test_steps_to_solve_reads_first_zero():
    h = RunHistory()
    for i, f in enumerate([3.0, 0.0, 1.0, 0.0], start=1):
        h.append(i, f, 1.0, 0.0)
    assert reporting.steps_to_solve(h) == 2
    h2 = RunHistory()
    h2.append(1, 4.0, 1.0, 0.0)
    assert reporting.steps_to_solve(h2) is None


# ------------------------------------------------------------------ config


def test_config_file_supplies_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "3sat", "n": 10, "seed": 4}))
    out1 = tmp_path / "one.dimacs"
    rc = main(["generate", "--config", str(cfg), "--out", str(out1)])
    assert rc == 0
    out2 = tmp_path / "two.dimacs"
    rc = main(["generate", "--problem", "3sat", "--n", "10", "--seed", "4", "--out", str(out2)])
    assert rc == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_explicit_flags_beat_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "3sat", "n": 10, "seed": 4}))
    flagged = tmp_path / "flagged.dimacs"
    rc = main(["generate", "--config", str(cfg), "--seed", "5", "--out", str(flagged)])
    assert rc == 0
    plain = tmp_path / "plain.dimacs"
    main(["generate", "--problem", "3sat", "--n", "10", "--seed", "5", "--out", str(plain)])
    assert flagged.read_bytes() == plain.read_bytes()


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "3sat", "typo_key": 1}))
    rc = main(["generate", "--config", str(cfg), "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "typo_key" in capsys.readouterr().err


# ----------------------------------------------------------------- analyze


def test_analyze_round_trip(run_dir, tmp_path, capsys):
    inst_path = tmp_path / "inst.json"
    rc = main(["generate", "--problem", "xorsat", "--n", "8", "--seed", "0", "--out", str(inst_path)])
    assert rc == 0
    out = tmp_path / "analysis"
    rc = main(
        [
            "analyze",
            "--checkpoint",
            str(run_dir / "xorsat_n8_gna-sa_seed0.npz"),
            "--instance",
            str(inst_path),
            "--samples",
            "200",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    printed = capsys.readouterr().out
    summary = json.loads((out / "summary.json").read_text())
    assert f"pearson_r={summary['pearson_r']!r}" in printed
    # recompute r from the exported matrices alone
    att = read_matrix(out / "attention_mean.csv")
    S = read_matrix(out / "adjacency_score.csv")
    i, j = np.tril_indices(8, k=-1)
    xs, ys = att[i, j], S[i, j]
    r = float(
        (xs - xs.mean()) @ (ys - ys.mean())
        / np.sqrt(((xs - xs.mean()) ** 2).sum() * ((ys - ys.mean()) ** 2).sum())
    )
    assert summary["pearson_r"] == pytest.approx(r, abs=1e-12)
    scatter = list(csv.DictReader(open(out / "scatter.csv")))
    assert len(scatter) == i.size


def test_analyze_dimension_mismatch_is_usage_error(run_dir, tmp_path, capsys):
    inst_path = tmp_path / "inst10.json"
    main(["generate", "--problem", "xorsat", "--n", "10", "--seed", "0", "--out", str(inst_path)])
    rc = main(
        [
            "analyze",
            "--checkpoint",
            str(run_dir / "xorsat_n8_gna-sa_seed0.npz"),
            "--instance",
            str(inst_path),
            "--out",
            str(tmp_path / "nope"),
        ]
    )
    assert rc == 2
    assert "dimension mismatch" in capsys.readouterr().err
