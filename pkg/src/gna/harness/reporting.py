"""Result aggregation and plot emission for completed run directories.

Everything here is a pure function of the CSVs on disk, so reports can be
regenerated at any time. CSV is the data format, SVG the figure format;
SVG output is salted and undated so identical inputs give identical bytes.
"""

import csv
import json
import re
from collections import defaultdict
from pathlib import Path

import numpy as np

from ..history import RunHistory

_RUN_CSV = re.compile(
    r"^(?P<kind>[a-z0-9_]+?)_n(?P<n>\d+)_(?P<solver>[a-z-]+)_seed(?P<seed>\d+)\.csv$"
)


def scan_runs(run_dir):
    """All parseable run histories under run_dir.

    Returns a list of dicts with keys kind, n, solver, seed, history.
    The manifest, when present, restricts the scan to runs it lists as ok;
    otherwise every name-matching CSV is taken.
    """
    run_dir = Path(run_dir)
    allowed = None
    regime = None
    manifest = run_dir / "manifest.json"
    if manifest.exists():
        blob = json.loads(manifest.read_text())
        allowed = {e["csv"] for e in blob.get("runs", []) if e.get("status") == "ok"}
        regime = blob.get("spec", {}).get("regime")
    found = []
    for p in sorted(run_dir.glob("*.csv")):
        m = _RUN_CSV.match(p.name)
        if m is None or (allowed is not None and p.name not in allowed):
            continue
        found.append(
            {
                "kind": m["kind"],
                "n": int(m["n"]),
                "solver": m["solver"],
                "seed": int(m["seed"]),
                "regime": regime,
                "history": RunHistory.from_csv(p),
            }
        )
    return found


def summarize(runs):
    """(kind, n, solver) -> mean/std/min of the final best objective.

    std is the population standard deviation so a single run reports 0.
    """
    groups = defaultdict(list)
    for r in runs:
        groups[(r["kind"], r["n"], r["solver"])].append(
            r["history"].column("best_f")[-1]
        )
    rows = []
    for (kind, n, solver), finals in sorted(groups.items()):
        finals = np.array(finals)
        rows.append(
            {
                "problem": kind,
                "n": n,
                "solver": solver,
                "runs": finals.size,
                "mean_final_best_f": float(finals.mean()),
                "std_final_best_f": float(finals.std()),
                "min_final_best_f": float(finals.min()),
            }
        )
    return rows


def steps_to_solve(history):
    """First step with best_f == 0, or None if the run never solved."""
    best = history.column("best_f")
    hits = np.nonzero(best == 0.0)[0]
    return None if hits.size == 0 else int(history.column("m")[hits[0]])


def scaling_rows(runs):
    """Per (kind, solver, n): median steps-to-solve over solved runs."""
    groups = defaultdict(list)
    for r in runs:
        groups[(r["kind"], r["solver"], r["n"])].append(steps_to_solve(r["history"]))
    rows = []
    for (kind, solver, n), steps in sorted(groups.items()):
        solved = [s for s in steps if s is not None]
        rows.append(
            {
                "problem": kind,
                "solver": solver,
                "n": n,
                "runs": len(steps),
                "solved": len(solved),
                "median_steps_to_solve": float(np.median(solved)) if solved else None,
            }
        )
    return rows


def fit_loglog_slope(ns, medians):
    """Least-squares slope of log(median) against log(n)."""
    ns = np.asarray(ns, dtype=np.float64)
    med = np.asarray(medians, dtype=np.float64)
    if ns.size < 2:
        raise ValueError("need at least two sizes for a scaling fit")
    if np.any(med <= 0) or np.any(ns <= 0):
        raise ValueError("log-log fit needs positive sizes and medians")
    slope, intercept = np.polyfit(np.log(ns), np.log(med), 1)
    return float(slope), float(intercept)


def _write_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if row[c] is None else repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])


def _mpl():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "gna"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_best_curves(runs, out_path, title, xlabel="m"):
    """Mean best-so-far per solver with a min-max band across seeds."""
    plt = _mpl()
    by_solver = defaultdict(list)
    for r in runs:
        by_solver[r["solver"]].append(r["history"])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for solver in sorted(by_solver):
        hists = by_solver[solver]
        # early-stopped runs stay flat at their final best once finished
        width = max(len(h) for h in hists)
        m_axis = max((h.column("m") for h in hists), key=len)
        curves = np.stack(
            [
                np.pad(c := h.column("best_f"), (0, width - len(c)), mode="edge")
                for h in hists
            ]
        )
        ax.plot(m_axis, curves.mean(axis=0), label=solver)
        ax.fill_between(m_axis, curves.min(axis=0), curves.max(axis=0), alpha=0.25)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("best f so far")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    _save(fig, out_path)
    plt.close(fig)


def plot_scaling(rows, slope, intercept, out_path, title):
    """Median steps-to-solve vs n on log-log axes with the fitted line."""
    plt = _mpl()
    ns = np.array([r["n"] for r in rows], dtype=np.float64)
    med = np.array([r["median_steps_to_solve"] for r in rows], dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.loglog(ns, med, "o", label="median steps")
    grid = np.linspace(ns.min(), ns.max(), 64)
    ax.loglog(grid, np.exp(intercept) * grid**slope, "--", label=f"slope {slope:.2f}")
    ax.set_xlabel("n")
    ax.set_ylabel("steps to solve")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    _save(fig, out_path)
    plt.close(fig)


SUMMARY_COLUMNS = (
    "problem",
    "n",
    "solver",
    "runs",
    "mean_final_best_f",
    "std_final_best_f",
    "min_final_best_f",
)
SCALING_COLUMNS = (
    "problem",
    "solver",
    "n",
    "runs",
    "solved",
    "median_steps_to_solve",
)


def write_report(run_dir, out_dir=None):
    """Aggregate one run directory into summary/scaling CSVs and SVG plots.

    Returns the list of written file names. Raises FileNotFoundError when
    the directory holds no readable run histories.
    """
    run_dir = Path(run_dir)
    out_dir = run_dir if out_dir is None else Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs = scan_runs(run_dir)
    if not runs:
        raise FileNotFoundError(f"no run histories found in {run_dir}")
    written = []

    rows = summarize(runs)
    _write_csv(out_dir / "summary.csv", rows, SUMMARY_COLUMNS)
    written.append("summary.csv")

    by_cell = defaultdict(list)
    for r in runs:
        by_cell[(r["kind"], r["n"])].append(r)
    for (kind, n), cell in sorted(by_cell.items()):
        regime = cell[0]["regime"] or ""
        xlabel = {"limited": "queries", "unlimited": "steps"}.get(regime, "m")
        name = f"best_curve_{kind}_n{n}.svg"
        plot_best_curves(cell, out_dir / name, f"{kind} n={n} {regime}".strip(), xlabel)
        written.append(name)

    # scaling section only when someone actually solved at multiple sizes
    unlimited = [r for r in runs if r["regime"] == "unlimited"]
    if unlimited:
        srows = scaling_rows(unlimited)
        _write_csv(out_dir / "scaling.csv", srows, SCALING_COLUMNS)
        written.append("scaling.csv")
        by_ps = defaultdict(list)
        for row in srows:
            if row["median_steps_to_solve"] is not None:
                by_ps[(row["problem"], row["solver"])].append(row)
        fits = []
        for (kind, solver), rws in sorted(by_ps.items()):
            if len(rws) < 2:
                continue
            slope, intercept = fit_loglog_slope(
                [r["n"] for r in rws], [r["median_steps_to_solve"] for r in rws]
            )
            fits.append(
                {"problem": kind, "solver": solver, "slope": slope, "intercept": intercept}
            )
            name = f"scaling_{kind}_{solver}.svg"
            plot_scaling(rws, slope, intercept, out_dir / name, f"{kind} ({solver})")
            written.append(name)
        if fits:
            _write_csv(
                out_dir / "scaling_fit.csv", fits, ("problem", "solver", "slope", "intercept")
            )
            written.append("scaling_fit.csv")
    return written
