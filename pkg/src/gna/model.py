"""Temperature-conditioned autoregressive transformer over bit strings.

q_theta(x|beta): decoder-only, single-head causal self-attention, pre-LN
residual blocks, GELU feed-forward, learned positional embeddings. The
inverse temperature enters through a linear projection of log(beta)
added to every token embedding. Vocabulary is {0,1}; a 0-token is
prepended as the start symbol at a dedicated position-0 slot, so the
positional table has n+1 rows.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import kernels

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    n_vars: int
    n_layers: int
    hidden: int
    n_heads: int = 1
    vocab: int = 2

    def __post_init__(self):
        if self.vocab != 2:
            raise ValueError("vocab must be 2 (bit tokens)")
        if self.n_heads != 1:
            raise ValueError("n_heads must be 1")
        if self.n_vars < 1:
            raise ValueError("n_vars must be positive")

    @classmethod
    def limited(cls, n_vars):
        """Preset for the limited-query regime."""
        return cls(n_vars=n_vars, n_layers=3, hidden=20)

    @classmethod
    def unlimited(cls, n_vars):
        """Preset for the unlimited-query regime."""
        return cls(n_vars=n_vars, n_layers=4, hidden=32)


@dataclass
class WeightedSampleBatch:
    """Distinct configurations with occurrence counts from a virtual batch."""

    configs: np.ndarray  # (U, n) uint8, pairwise distinct
    weights: np.ndarray  # (U,) positive int64, summing to the virtual batch size
    log_q: np.ndarray  # (U,) log q_theta(x|beta) at sampling time
    beta: float

    @property
    def total(self):
        return int(self.weights.sum())

    def mean(self, values):
        """Weighted expectation of per-config statistics."""
        w = self.weights.astype(np.float64)
        return float(np.dot(w, np.asarray(values, dtype=np.float64)) / w.sum())


def _log_bernoulli(l0, l1):
    """Per-row (logp0, logp1) from a pair of logits, max-subtracted."""
    lp1 = -np.logaddexp(0.0, l0 - l1)
    lp0 = -np.logaddexp(0.0, l1 - l0)
    return lp0, lp1


class GNAModel:
    def __init__(self, cfg, seed=0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        h = cfg.hidden
        n = cfg.n_vars

        def w(*shape):
            return ad.Tensor(rng.normal(0.0, 0.02, shape), requires_grad=True)

        def zeros(*shape):
            return ad.Tensor(np.zeros(shape), requires_grad=True)

        def ones(*shape):
            return ad.Tensor(np.ones(shape), requires_grad=True)

        p = {
            "tok_emb": w(cfg.vocab, h),
            "pos_emb": w(n + 1, h),
            "beta_w": w(1, h),
            "beta_b": zeros(h),
        }
        for i in range(cfg.n_layers):
            p[f"l{i}.ln1_g"] = ones(h)
            p[f"l{i}.ln1_b"] = zeros(h)
            p[f"l{i}.wq"] = w(h, h)
            p[f"l{i}.bq"] = zeros(h)
            p[f"l{i}.wk"] = w(h, h)
            p[f"l{i}.bk"] = zeros(h)
            p[f"l{i}.wv"] = w(h, h)
            p[f"l{i}.bv"] = zeros(h)
            p[f"l{i}.wo"] = w(h, h)
            p[f"l{i}.bo"] = zeros(h)
            p[f"l{i}.ln2_g"] = ones(h)
            p[f"l{i}.ln2_b"] = zeros(h)
            p[f"l{i}.w1"] = w(h, 4 * h)
            p[f"l{i}.b1"] = zeros(4 * h)
            p[f"l{i}.w2"] = w(4 * h, h)
            p[f"l{i}.b2"] = zeros(h)
        p["lnf_g"] = ones(h)
        p["lnf_b"] = zeros(h)
        p["head_w"] = w(h, cfg.vocab)
        p["head_b"] = zeros(cfg.vocab)
        self.params = p

    # ------------------------------------------------------------ forward

    def _forward(self, tokens, logbeta, collect_attn=False):
        """tokens (B,L) int, logbeta (B,) -> logits Tensor (B,L,2), attn list.

        Records on the active tape if one is open; otherwise a plain
        forward. Attention probabilities are detached copies.
        """
        p = self.params
        B, L = tokens.shape
        x = ad.index_rows(p["tok_emb"], tokens)
        x = x + ad.slice_rows(p["pos_emb"], L)
        tb = ad.matmul(ad.Tensor(logbeta.reshape(-1, 1)), p["beta_w"]) + p["beta_b"]
        x = x + ad.reshape(tb, (B, 1, self.cfg.hidden))
        scale = 1.0 / math.sqrt(self.cfg.hidden)
        attn = []
        for i in range(self.cfg.n_layers):
            a = ad.layernorm(x, p[f"l{i}.ln1_g"], p[f"l{i}.ln1_b"])
            q = ad.matmul(a, p[f"l{i}.wq"]) + p[f"l{i}.bq"]
            k = ad.matmul(a, p[f"l{i}.wk"]) + p[f"l{i}.bk"]
            v = ad.matmul(a, p[f"l{i}.wv"]) + p[f"l{i}.bv"]
            scores = ad.matmul(q, ad.transpose_last2(k)) * scale
            probs = ad.causal_softmax(scores)
            if collect_attn:
                attn.append(probs.data.copy())
            ctx = ad.matmul(probs, v)
            x = x + (ad.matmul(ctx, p[f"l{i}.wo"]) + p[f"l{i}.bo"])
            m = ad.layernorm(x, p[f"l{i}.ln2_g"], p[f"l{i}.ln2_b"])
            mid = ad.gelu(ad.matmul(m, p[f"l{i}.w1"]) + p[f"l{i}.b1"])
            x = x + (ad.matmul(mid, p[f"l{i}.w2"]) + p[f"l{i}.b2"])
        x = ad.layernorm(x, p["lnf_g"], p["lnf_b"])
        logits = ad.matmul(x, p["head_w"]) + p["head_b"]
        return logits, attn

    def _check_beta(self, beta):
        b = np.asarray(beta, dtype=np.float64)
        if np.any(b <= 0):
            raise ValueError(f"beta must be positive, got {beta}")
        return b

    def _input_tokens(self, X):
        X = np.asarray(X)
        B, n = X.shape
        if n != self.cfg.n_vars:
            raise ValueError(
                f"configuration length {n} != n_vars {self.cfg.n_vars}"
            )
        tokens = np.zeros((B, n), dtype=np.int64)
        tokens[:, 1:] = X[:, :-1]
        return tokens

    def log_prob_tensor(self, X, beta):
        """Differentiable log q_theta for a batch. X (B,n), beta scalar or (B,)."""
        X = np.asarray(X, dtype=np.int64)
        b = self._check_beta(beta)
        logb = np.broadcast_to(np.log(b), (X.shape[0],)).astype(np.float64)
        logits, _ = self._forward(self._input_tokens(X), logb)
        logp = ad.log_softmax(logits)
        per_bit = ad.gather_last(logp, X)
        return ad.sum_(per_bit, axis=1)

    def log_prob_batch(self, X, beta):
        """Plain-array log q_theta for a batch (no tape contribution)."""
        return self.log_prob_tensor(X, beta).data

    def log_prob(self, x, beta):
        """Exact log-probability of one configuration at one beta."""
        x = np.asarray(x).reshape(1, -1)
        return float(self.log_prob_batch(x, float(beta))[0])

    def forward_logits(self, prefix, beta):
        """Next-bit logits after an observed prefix (length < n_vars)."""
        b = float(self._check_beta(float(beta)))
        prefix = np.asarray(prefix, dtype=np.int64).reshape(-1)
        if prefix.size >= self.cfg.n_vars:
            raise ValueError(
                f"prefix length {prefix.size} must be < n_vars {self.cfg.n_vars}"
            )
        tokens = np.concatenate([[0], prefix])[None, :].astype(np.int64)
        logits, _ = self._forward(tokens, np.array([math.log(b)]))
        return logits.data[0, -1].copy()

    def attention_maps(self, X, beta):
        """Per-layer raw attention (B, n+1, n+1) on full sequences [start, x]."""
        X = np.asarray(X, dtype=np.int64)
        b = float(self._check_beta(float(beta)))
        B = X.shape[0]
        tokens = np.concatenate([np.zeros((B, 1), dtype=np.int64), X], axis=1)
        logb = np.full(B, math.log(b))
        _, attn = self._forward(tokens, logb, collect_attn=True)
        return attn

    # ----------------------------------------------------------- sampling

    def _step(self, toks, pos, logb, cache):
        """One incremental decode step for a batch of chains.

        toks (B,) int token at position `pos`; cache holds per-layer
        (K, V) arrays of shape (B, pos, h). Returns (logp0, logp1) and
        mutates cache in place (appends one column).
        """
        p = self.params
        cfg = self.cfg
        x = (
            p["tok_emb"].data[toks]
            + p["pos_emb"].data[pos]
            + logb[:, None] * p["beta_w"].data[0]
            + p["beta_b"].data
        )
        scale = 1.0 / math.sqrt(cfg.hidden)
        for i in range(cfg.n_layers):
            a, _, _ = kernels.layernorm_fwd(
                x, p[f"l{i}.ln1_g"].data, p[f"l{i}.ln1_b"].data
            )
            q = a @ p[f"l{i}.wq"].data + p[f"l{i}.bq"].data
            k1 = a @ p[f"l{i}.wk"].data + p[f"l{i}.bk"].data
            v1 = a @ p[f"l{i}.wv"].data + p[f"l{i}.bv"].data
            K, V = cache[i]
            if K is None:
                K = k1[:, None, :]
                V = v1[:, None, :]
            else:
                K = np.concatenate([K, k1[:, None, :]], axis=1)
                V = np.concatenate([V, v1[:, None, :]], axis=1)
            cache[i] = (K, V)
            scores = np.matmul(K, q[:, :, None])[:, :, 0] * scale  # (B, pos+1)
            scores -= scores.max(axis=1, keepdims=True)
            e = np.exp(scores)
            w = e / e.sum(axis=1, keepdims=True)
            ctx = np.matmul(w[:, None, :], V)[:, 0, :]
            x = x + ctx @ p[f"l{i}.wo"].data + p[f"l{i}.bo"].data
            m, _, _ = kernels.layernorm_fwd(
                x, p[f"l{i}.ln2_g"].data, p[f"l{i}.ln2_b"].data
            )
            mid = kernels.gelu_fwd(m @ p[f"l{i}.w1"].data + p[f"l{i}.b1"].data)
            x = x + mid @ p[f"l{i}.w2"].data + p[f"l{i}.b2"].data
        xf, _, _ = kernels.layernorm_fwd(x, p["lnf_g"].data, p["lnf_b"].data)
        logits = xf @ p["head_w"].data + p["head_b"].data
        return _log_bernoulli(logits[:, 0], logits[:, 1])

    def sample(self, beta, count, rng):
        """Draw `count` i.i.d. configurations autoregressively at `beta`."""
        if count < 1:
            raise ValueError("count must be >= 1")
        b = float(self._check_beta(float(beta)))
        n = self.cfg.n_vars
        logb = np.full(count, math.log(b))
        toks = np.zeros(count, dtype=np.int64)
        cache = [(None, None) for _ in range(self.cfg.n_layers)]
        X = np.empty((count, n), dtype=np.uint8)
        for t in range(n):
            _, lp1 = self._step(toks, t, logb, cache)
            bits = (rng.random(count) < np.exp(lp1)).astype(np.uint8)
            X[:, t] = bits
            toks = bits.astype(np.int64)
        return X

    def sample_unique_reweighted(self, beta, n_batch, n_unique, rng):
        """Branch a virtual batch of n_batch chains over unique prefixes.

        Prefixes grow breadth-first with binomial count splitting; at the
        first position where the number of distinct prefixes exceeds
        n_unique the branch set freezes and each prefix is completed by a
        single autoregressive path. Weights are chain counts, so weighted
        statistics are unbiased estimates of plain Monte Carlo statistics
        at batch size n_batch.
        """
        if not (n_batch >= n_unique >= 1):
            raise ValueError("need n_batch >= n_unique >= 1")
        b = float(self._check_beta(float(beta)))
        n = self.cfg.n_vars
        counts = np.array([n_batch], dtype=np.int64)
        log_q = np.zeros(1)
        bits_so_far = np.zeros((1, 0), dtype=np.uint8)
        toks = np.zeros(1, dtype=np.int64)
        cache = [(None, None) for _ in range(self.cfg.n_layers)]
        frozen = False
        for t in range(n):
            B = counts.shape[0]
            logb = np.full(B, math.log(b))
            lp0, lp1 = self._step(toks, t, logb, cache)
            if not frozen:
                c1 = rng.binomial(counts, np.exp(lp1))
                c0 = counts - c1
                i0 = np.where(c0 > 0)[0]
                i1 = np.where(c1 > 0)[0]
                idx = np.concatenate([i0, i1])
                newbits = np.concatenate(
                    [np.zeros(i0.size, np.uint8), np.ones(i1.size, np.uint8)]
                )
                counts = np.concatenate([c0[i0], c1[i1]])
                log_q = np.concatenate([log_q[i0] + lp0[i0], log_q[i1] + lp1[i1]])
                bits_so_far = np.concatenate(
                    [bits_so_far[idx], newbits[:, None]], axis=1
                )
                for li in range(self.cfg.n_layers):
                    K, V = cache[li]
                    cache[li] = (K[idx], V[idx])
                toks = newbits.astype(np.int64)
                if counts.shape[0] > n_unique:
                    frozen = True
            else:
                newbits = (rng.random(B) < np.exp(lp1)).astype(np.uint8)
                log_q = log_q + np.where(newbits == 1, lp1, lp0)
                bits_so_far = np.concatenate([bits_so_far, newbits[:, None]], axis=1)
                toks = newbits.astype(np.int64)
        return WeightedSampleBatch(
            configs=bits_so_far, weights=counts, log_q=log_q, beta=b
        )

    # -------------------------------------------------------- persistence

    def parameters(self):
        return self.params

    def snapshot(self):
        """Deep copy of all parameter arrays (for checkpoint reversion)."""
        return {k: t.data.copy() for k, t in self.params.items()}

    def restore(self, snap):
        for k, t in self.params.items():
            t.data[...] = snap[k]

    def save(self, path, rng=None):
        """Checkpoint: config + parameters (+ optional RNG state), bit-exact."""
        meta = {
            "version": CHECKPOINT_VERSION,
            "config": {
                "n_vars": self.cfg.n_vars,
                "n_layers": self.cfg.n_layers,
                "hidden": self.cfg.hidden,
                "n_heads": self.cfg.n_heads,
                "vocab": self.cfg.vocab,
            },
            "rng_state": rng.bit_generator.state if rng is not None else None,
        }
        arrays = {f"param:{k}": t.data for k, t in self.params.items()}
        np.savez(path, meta=np.frombuffer(json.dumps(meta).encode(), np.uint8), **arrays)

    @classmethod
    def load(cls, path):
        """Returns (model, rng_state_or_None)."""
        with np.load(path) as z:
            meta = json.loads(bytes(z["meta"]).decode())
            if meta["version"] != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta['version']}")
            model = cls(ModelConfig(**meta["config"]), seed=0)
            for k, t in model.params.items():
                t.data[...] = z[f"param:{k}"]
        rng_state = meta["rng_state"]
        return model, rng_state
