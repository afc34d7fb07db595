"""Attention capture, adjacency scores, and their correlation."""

import numpy as np
import pytest

from gna import GNAModel, ModelConfig
from gna.analysis import (
    AdjacencyScore,
    AttentionRecord,
    adjacency_score,
    attention_structure_correlation,
    collect_attention,
    variable_adjacency,
)
from gna.problems import generate

# ------------------------------------------------------------- collection


def _zero_queries(model):
    for i in range(model.cfg.n_layers):
        model.params[f"l{i}.wq"].data[...] = 0.0
        model.params[f"l{i}.bq"].data[...] = 0.0


def test_uniform_attention_rows():
    # zeroed queries give constant scores, so the causal softmax is exactly
    # uniform over the allowed prefix at every position
    n = 5
    m = GNAModel(ModelConfig.limited(n), seed=0)
    _zero_queries(m)
    rng = np.random.default_rng(0)
    raw = m.attention_maps(m.sample(1.0, 4, rng), 1.0)
    for a in raw:
        for t in range(n + 1):
            assert np.allclose(a[:, t, : t + 1], 1.0 / (t + 1), atol=1e-12)
            assert np.all(a[:, t, t + 1 :] == 0.0)
    rec = collect_attention(m, 1.0, 8, rng)
    for i in range(n):
        assert np.allclose(rec.layers[:, i, : i + 1], 1.0 / (i + 1), atol=1e-12)


def test_record_rows_are_distributions():
    m = GNAModel(ModelConfig.unlimited(7), seed=3)
    rec = collect_attention(m, 2.0, 16, np.random.default_rng(1))
    assert rec.layers.shape == (m.cfg.n_layers, 7, 7)
    assert rec.n == 7
    assert rec.n_samples == 16
    sums = rec.layers.sum(axis=2)
    assert np.allclose(sums, 1.0, atol=1e-12)
    for k in range(rec.layers.shape[0]):
        assert np.all(rec.layers[k][np.triu_indices(7, k=1)] == 0.0)
    lm = rec.layer_mean()
    assert np.allclose(lm, rec.layers.mean(axis=0))


def test_capture_consumes_no_randomness():
    m = GNAModel(ModelConfig.limited(6), seed=4)
    r1 = np.random.default_rng(7)
    r2 = np.random.default_rng(7)
    collect_attention(m, 1.0, 10, r1)
    a = m.sample(1.0, 10, r1)
    m.sample(1.0, 10, r2)  # same draw count, no capture in between
    b = m.sample(1.0, 10, r2)
    assert np.array_equal(a, b)


def test_collect_requires_positive_samples():
    m = GNAModel(ModelConfig.limited(4), seed=0)
    with pytest.raises(ValueError):
        collect_attention(m, 1.0, 0, np.random.default_rng(0))


def test_single_sample_record():
    m = GNAModel(ModelConfig.limited(4), seed=2)
    rec = collect_attention(m, 5.0, 1, np.random.default_rng(3))
    assert rec.n_samples == 1
    assert np.allclose(rec.layers.sum(axis=2), 1.0)


# -------------------------------------------------------------- adjacency


def test_variable_adjacency_single_clause():
    inst = generate("3sat", 10, seed=0)
    A = variable_adjacency(inst)
    assert A.shape == (10, 10)
    assert np.array_equal(A, A.T)
    assert np.all(np.diag(A) == 0)
    # every clause's variable pairs must be marked
    for clause in inst.var_idx:
        for i in clause:
            for j in clause:
                if i != j:
                    assert A[i, j] == 1


def test_variable_adjacency_xorsat_degree_bound():
    inst = generate("xorsat", 12, seed=1)
    A = variable_adjacency(inst)
    assert np.array_equal(A, A.T)
    # 3-regular hypergraph: each variable shares clauses with at most 6 others
    assert np.all(A.sum(axis=1) <= 6)
    assert np.all(A.sum(axis=1) >= 1)


def test_variable_adjacency_rejects_unstructured_kinds():
    inst = generate("subset_sum", 8, seed=0)
    with pytest.raises(ValueError, match="clause structure"):
        variable_adjacency(inst)


# ------------------------------------------------------------------ score


def test_score_on_path_graph_matches_linear_solve():
    A = np.zeros((3, 3))
    A[0, 1] = A[1, 0] = A[1, 2] = A[2, 1] = 1.0
    alpha, l = 0.15, 10
    sc = adjacency_score(A, alpha=alpha, l=l)
    # independent route: S = A (I - alpha A)^(-1) (I - (alpha A)^l)
    aA = alpha * A
    want = A @ np.linalg.solve(np.eye(3) - aA, np.eye(3) - np.linalg.matrix_power(aA, l))
    assert np.allclose(sc.S, want, atol=1e-12)
    assert sc.lambda_max == pytest.approx(np.sqrt(2.0))


def test_score_matches_brute_force_walk_counts():
    rng = np.random.default_rng(5)
    A = np.zeros((5, 5), dtype=np.int64)
    for i, j in [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]:
        A[i, j] = A[j, i] = 1
    alpha, l = 0.1, 4
    sc = adjacency_score(A, alpha=alpha, l=l)
    nbrs = [np.nonzero(A[i])[0] for i in range(5)]

    def walks(i, j, k):
        if k == 0:
            return int(i == j)
        return sum(walks(v, j, k - 1) for v in nbrs[i])

    want = np.zeros((5, 5))
    for i in range(5):
        for j in range(5):
            want[i, j] = sum(alpha ** (k - 1) * walks(i, j, k) for k in range(1, l + 1))
    assert np.allclose(sc.S, want, atol=1e-12)


def test_score_alpha_bound():
    A = np.ones((3, 3)) - np.eye(3)  # triangle, lambda_max = 2
    sc = adjacency_score(A, alpha=0.49, l=3)
    assert sc.lambda_max == pytest.approx(2.0)
    with pytest.raises(ValueError, match=r"alpha must lie in \(0, 0\.5"):
        adjacency_score(A, alpha=0.51, l=3)
    with pytest.raises(ValueError):
        adjacency_score(A, alpha=0.0, l=3)


def test_score_input_validation():
    with pytest.raises(ValueError, match="square"):
        adjacency_score(np.zeros((2, 3)))
    with pytest.raises(ValueError, match="symmetric"):
        adjacency_score(np.triu(np.ones((3, 3)), k=1))
    with pytest.raises(ValueError, match="diagonal"):
        adjacency_score(np.eye(3))
    with pytest.raises(ValueError, match="0/1"):
        A = np.zeros((3, 3))
        A[0, 1] = A[1, 0] = 2.0
        adjacency_score(A)
    with pytest.raises(ValueError, match="l must be"):
        A = np.zeros((3, 3))
        A[0, 1] = A[1, 0] = 1.0
        adjacency_score(A, alpha=0.1, l=0)


def test_score_isolated_graph_allows_any_alpha():
    sc = adjacency_score(np.zeros((4, 4)), alpha=100.0, l=5)
    assert np.all(sc.S == 0.0)
    assert sc.lambda_max == 0.0


# ------------------------------------------------------------ correlation


def _record_from(att, beta=1.0):
    return AttentionRecord(layers=att[None, :, :], n_samples=1, beta=beta)


def test_correlation_perfect_on_proportional_series():
    n = 6
    rng = np.random.default_rng(0)
    S = rng.random((n, n))
    S = np.tril(S + S.T, k=-1)
    S = S + S.T
    att = np.tril(3.0 * S + 0.0, k=-1)
    att[np.diag_indices(n)] = 0.5
    r = attention_structure_correlation(
        _record_from(att), AdjacencyScore(S=S, alpha=0.1, l=2, lambda_max=1.0)
    )
    assert r == pytest.approx(1.0)


def test_correlation_affine_invariance():
    n = 8
    rng = np.random.default_rng(1)
    att = np.tril(rng.random((n, n)))
    S1 = rng.random((n, n))
    S2 = 2.5 * S1 + 7.0
    r1 = attention_structure_correlation(
        _record_from(att), AdjacencyScore(S=S1, alpha=0.1, l=2, lambda_max=1.0)
    )
    r2 = attention_structure_correlation(
        _record_from(att), AdjacencyScore(S=S2, alpha=0.1, l=2, lambda_max=1.0)
    )
    assert r1 == pytest.approx(r2, abs=1e-12)


def test_correlation_none_when_degenerate():
    n = 5
    att = np.tril(np.full((n, n), 0.25))
    S = np.arange(n * n, dtype=float).reshape(n, n)
    r = attention_structure_correlation(
        _record_from(att), AdjacencyScore(S=S, alpha=0.1, l=2, lambda_max=1.0)
    )
    assert r is None  # constant attention below the diagonal


def test_correlation_shape_mismatch():
    att = np.tril(np.random.default_rng(0).random((4, 4)))
    with pytest.raises(ValueError, match="mismatch"):
        attention_structure_correlation(
            _record_from(att), AdjacencyScore(S=np.zeros((5, 5)), alpha=0.1, l=1, lambda_max=0.0)
        )


def test_correlation_uses_only_lower_triangle():
    n = 6
    rng = np.random.default_rng(2)
    att = np.tril(rng.random((n, n)), k=-1)
    S1 = rng.random((n, n))
    S2 = S1.copy()
    S2[np.triu_indices(n)] = 123.0  # diagonal and above must be ignored
    rec = _record_from(att)
    r1 = attention_structure_correlation(rec, AdjacencyScore(S=S1, alpha=0.1, l=2, lambda_max=1.0))
    r2 = attention_structure_correlation(rec, AdjacencyScore(S=S2, alpha=0.1, l=2, lambda_max=1.0))
    assert r1 == pytest.approx(r2, abs=1e-14)
