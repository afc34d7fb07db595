"""Ising sparsification on the 4x4 open-boundary lattice (24 couplings).

Decision bit x_e = 1 keeps coupling e. Objective is the exact KL
divergence between the full model p(z) ~ exp(sum J_e s_e) over all 2^16
spin states and the sparsified model, plus an L1 keep penalty.
"""

import numpy as np
from scipy.special import logsumexp

N_SPINS = 16
N_EDGES = 24
LAMBDA = 0.01


def grid_edges():
    """Edges of the 4x4 grid, row-major scan, right then down."""
    edges = []
    for r in range(4):
        for c in range(4):
            i = 4 * r + c
            if c < 3:
                edges.append((i, i + 1))
            if r < 3:
                edges.append((i, i + 4))
    return edges


class IsingSparsification:
    kind = "ising"

    def __init__(self, J, seed=None):
        J = np.asarray(J, dtype=np.float64)
        if J.shape != (N_EDGES,):
            raise ValueError(f"expected {N_EDGES} couplings, got {J.shape}")
        self.n = N_EDGES
        self.seed = seed
        self.J = J
        self.edges = grid_edges()
        spins = ((np.arange(1 << N_SPINS)[:, None] >> np.arange(N_SPINS)) & 1) * 2 - 1
        ii = np.array([e[0] for e in self.edges])
        jj = np.array([e[1] for e in self.edges])
        # spin products per (state, edge); float so each evaluate is one dgemv
        self._S = (spins[:, ii] * spins[:, jj]).astype(np.float64)
        log_w = self._S @ self.J
        self._logZ_p = float(logsumexp(log_w))
        p = np.exp(log_w - self._logZ_p)
        self._edge_mean = p @ self._S  # <s_e> under the full model

    @classmethod
    def generate(cls, n, seed):
        if n != N_EDGES:
            raise ValueError(
                f"ising sparsification is fixed at n={N_EDGES} (4x4 lattice edges)"
            )
        rng = np.random.default_rng(seed)
        mag = rng.uniform(0.05, 5.0, N_EDGES)
        sign = rng.integers(0, 2, N_EDGES) * 2 - 1
        return cls(mag * sign, seed=seed)

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ValueError(f"expected {self.n} bits, got shape {x.shape}")
        return x

    def evaluate(self, x):
        x = self._check(x)
        logZ_q = float(logsumexp(self._S @ (self.J * x)))
        kl = float(self._edge_mean @ (self.J * (1.0 - x))) + logZ_q - self._logZ_p
        # KL >= 0 exactly; clip float residue so the invariant holds numerically
        return max(kl, 0.0) + LAMBDA * float(x.sum())

    def evaluate_batch(self, X):
        return np.array([self.evaluate(row) for row in np.asarray(X)])

    def to_payload(self):
        return {"J": self.J.tolist()}

    @classmethod
    def from_payload(cls, n, seed, payload):
        return cls(np.array(payload["J"]), seed=seed)
