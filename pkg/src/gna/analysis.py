"""Attention-structure introspection.

Compares what the trained sampler attends to against the constraint graph
of the instance it was trained on: batch-averaged attention maps on one
side, a discounted path-count score S = sum_{k=1..l} alpha^(k-1) A^k on
the other, tied together by a Pearson correlation over variable pairs.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AttentionRecord",
    "AdjacencyScore",
    "adjacency_score",
    "attention_structure_correlation",
    "collect_attention",
    "variable_adjacency",
]


@dataclass(frozen=True)
class AttentionRecord:
    """Per-layer (n, n) attention averaged over a sample batch at one beta.

    Row i / column j index variables; the start token used by the decoder
    is stripped and each row renormalized, so every row is again a convex
    combination over positions j <= i and the upper triangle is exactly 0.
    """

    layers: np.ndarray  # (n_layers, n, n)
    n_samples: int
    beta: float

    @property
    def n(self):
        return self.layers.shape[1]

    def layer_mean(self):
        return self.layers.mean(axis=0)


@dataclass(frozen=True)
class AdjacencyScore:
    S: np.ndarray
    alpha: float
    l: int
    lambda_max: float


def collect_attention(model, beta, n_samples, rng):
    """Sample n_samples configurations at beta and average the attention
    probabilities captured while re-scoring them.

    Capture runs as a separate teacher-forced pass over the sampled batch,
    so it consumes no randomness: the sampling stream is identical with or
    without it.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    X = model.sample(beta, n_samples, rng)
    raw = model.attention_maps(X, beta)  # list of (B, n+1, n+1)
    layers = []
    for a in raw:
        mean = a.mean(axis=0)
        m = mean[1:, 1:]
        m = m / m.sum(axis=1, keepdims=True)
        m[np.triu_indices(m.shape[0], k=1)] = 0.0
        layers.append(m)
    return AttentionRecord(
        layers=np.stack(layers), n_samples=int(n_samples), beta=float(beta)
    )


def variable_adjacency(instance):
    """0/1 co-occurrence matrix: A[i, j] = 1 iff i and j share a clause."""
    if instance.kind == "3sat":
        clauses = instance.var_idx
    elif instance.kind == "xorsat":
        clauses = instance.triples
    else:
        raise ValueError(f"no clause structure for problem kind {instance.kind!r}")
    A = np.zeros((instance.n, instance.n), dtype=np.int64)
    for clause in clauses:
        for i in clause:
            for j in clause:
                if i != j:
                    A[i, j] = 1
    return A


def adjacency_score(A, alpha=0.15, l=10):
    """Discounted path counts S = sum_{k=1..l} alpha^(k-1) A^k.

    alpha must lie in (0, 1/|lambda_max|) so longer paths are damped; the
    exact matrix powers are cheap at these sizes.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if not np.array_equal(A, A.T):
        raise ValueError("A must be symmetric")
    if np.any(np.diag(A) != 0):
        raise ValueError("A must have a zero diagonal")
    if not np.all((A == 0) | (A == 1)):
        raise ValueError("A must be a 0/1 matrix")
    if l < 1:
        raise ValueError("l must be >= 1")
    lam = float(np.max(np.abs(np.linalg.eigvalsh(A)))) if A.size else 0.0
    bound = np.inf if lam == 0.0 else 1.0 / lam
    if not 0.0 < alpha < bound:
        raise ValueError(f"alpha must lie in (0, {bound:.6g}); got {alpha}")
    S = np.zeros_like(A)
    P = np.eye(A.shape[0])
    for k in range(1, l + 1):
        P = P @ A
        S += alpha ** (k - 1) * P
    return AdjacencyScore(S=S, alpha=float(alpha), l=int(l), lambda_max=lam)


def attention_structure_correlation(record, score):
    """Pearson r between layer-averaged attention and S over pairs i > j.

    Only the causal lower triangle enters: upper-triangle attention is
    structurally zero and would inflate the correlation. Returns None when
    either series has zero variance (r undefined).
    """
    att = record.layer_mean()
    S = score.S
    if att.shape != S.shape:
        raise ValueError(f"size mismatch: attention {att.shape} vs score {S.shape}")
    i, j = np.tril_indices(att.shape[0], k=-1)
    xs = att[i, j]
    ys = S[i, j]
    if np.ptp(xs) == 0.0 or np.ptp(ys) == 0.0:
        return None
    xs = xs - xs.mean()
    ys = ys - ys.mean()
    return float(xs @ ys / np.sqrt((xs @ xs) * (ys @ ys)))
