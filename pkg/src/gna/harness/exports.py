"""Attention/adjacency export bundle for a trained checkpoint.

Writes, per invocation: one CSV per attention layer plus the layer mean,
the 0/1 adjacency matrix and its path-count score matrix, the pair-level
scatter series behind the correlation, a greedy-free rollout trace (next-
bit probability and live attention row per step), summary.json with the
Pearson r, and SVG renderings of the heatmap and scatter.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .. import __version__
from ..analysis import (
    adjacency_score,
    attention_structure_correlation,
    collect_attention,
    variable_adjacency,
)
from ..kernels import BACKEND


def _write_matrix(path, mat):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(mat):
            w.writerow([repr(float(v)) for v in row])


def read_matrix(path):
    with open(path, newline="") as fh:
        return np.array([[float(v) for v in row] for row in csv.reader(fh)])


def _rollout_trace(model, beta, rng):
    """One sampled configuration with per-step p(next bit = 1) and the
    layer-averaged attention row active at that step (start slot first)."""
    x = model.sample(beta, 1, rng)[0]
    raw = model.attention_maps(x[None, :], beta)
    att = np.mean([a[0] for a in raw], axis=0)  # (n+1, n+1), start included
    steps = []
    for t in range(model.cfg.n_vars):
        logits = model.forward_logits(x[:t], beta)
        p1 = 1.0 / (1.0 + math.exp(logits[0] - logits[1]))
        steps.append(
            {
                "position": t,
                "p_next_one": p1,
                "sampled_bit": int(x[t]),
                "attention_row": [float(v) for v in att[t, : t + 1]],
            }
        )
    return {"beta": beta, "config": [int(v) for v in x], "steps": steps}


def _heatmap(mat, path, title):
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "gna"
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    im = ax.imshow(mat, cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_title(title)
    ax.set_xlabel("variable j")
    ax.set_ylabel("variable i")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _scatter(xs, ys, r, path):
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "gna"
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    ax.plot(xs, ys, "o", ms=3, alpha=0.6)
    label = "undefined" if r is None else f"{r:.3f}"
    ax.set_title(f"attention vs adjacency score (r = {label})")
    ax.set_xlabel("adjacency score S(i, j)")
    ax.set_ylabel("mean attention(i, j)")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def export_analysis(model, instance, beta, n_samples, out_dir, rng, alpha=0.15, l=10):
    """Run the full attention-vs-structure analysis and write the bundle.

    Returns the summary dict (also written to summary.json).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    record = collect_attention(model, beta, n_samples, rng)
    A = variable_adjacency(instance)
    score = adjacency_score(A, alpha=alpha, l=l)
    r = attention_structure_correlation(record, score)

    for k in range(record.layers.shape[0]):
        _write_matrix(out / f"attention_layer{k}.csv", record.layers[k])
    mean_att = record.layer_mean()
    _write_matrix(out / "attention_mean.csv", mean_att)
    _write_matrix(out / "adjacency.csv", A)
    _write_matrix(out / "adjacency_score.csv", score.S)

    i, j = np.tril_indices(record.n, k=-1)
    with open(out / "scatter.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("i", "j", "attention", "score"))
        for a, b in zip(i, j):
            w.writerow((int(a), int(b), repr(float(mean_att[a, b])), repr(float(score.S[a, b]))))

    trace = _rollout_trace(model, beta, rng)
    (out / "rollout.json").write_text(json.dumps(trace, indent=1) + "\n")

    summary = {
        "version": __version__,
        "kernel_backend": BACKEND,
        "problem": instance.kind,
        "n": instance.n,
        "beta": float(beta),
        "n_samples": int(n_samples),
        "alpha": float(alpha),
        "path_length": int(l),
        "lambda_max": score.lambda_max,
        "pearson_r": r,
        "pair_count": int(i.size),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    _heatmap(mean_att, out / "attention_mean.svg", f"mean attention (beta={beta:g})")
    _heatmap(score.S, out / "adjacency_score.svg", f"adjacency score (alpha={alpha:g}, l={l})")
    _scatter(score.S[i, j], mean_att[i, j], r, out / "scatter.svg")
    return summary
