"""Contamination control over an n-stage supply chain.

x_i = 1 applies prevention at stage i. Contamination evolves as
Z_i = Lambda_i (1-x_i)(1-Z_{i-1}) + (1 - Gamma_i x_i) Z_{i-1}
with Beta-distributed rates frozen into the instance (100 replicas of
common random numbers), so f is a deterministic black box:
f(x) = sum_i [ c x_i + rho (mean_k step(Z_i^k - U) - eps) ].
"""

import numpy as np

COST = 1.0
THRESHOLD = 0.1
PENALTY = 1.0
TOLERANCE = 0.05
N_REPLICAS = 100


class ContaminationControl:
    kind = "contamination"

    def __init__(self, z0, lam, gam, seed=None):
        self.z0 = np.asarray(z0, dtype=np.float64)
        self.lam = np.asarray(lam, dtype=np.float64)
        self.gam = np.asarray(gam, dtype=np.float64)
        if self.lam.shape != self.gam.shape or self.lam.ndim != 2:
            raise ValueError("lambda/gamma must share shape (n, replicas)")
        if self.z0.shape != (self.lam.shape[1],):
            raise ValueError("z0 replica count mismatch")
        self.n = self.lam.shape[0]
        self.seed = seed

    @classmethod
    def generate(cls, n, seed):
        if n < 1:
            raise ValueError("need n >= 1 stages")
        rng = np.random.default_rng(seed)
        z0 = rng.beta(1.0, 30.0, N_REPLICAS)
        lam = rng.beta(1.0, 17.0 / 3.0, (n, N_REPLICAS))
        gam = rng.beta(1.0, 3.0 / 7.0, (n, N_REPLICAS))
        return cls(z0, lam, gam, seed=seed)

    def evaluate(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ValueError(f"expected {self.n} bits, got shape {x.shape}")
        z = self.z0.copy()
        viol = 0.0
        for i in range(self.n):
            z = self.lam[i] * (1.0 - x[i]) * (1.0 - z) + (1.0 - self.gam[i] * x[i]) * z
            viol += float((z >= THRESHOLD).mean())
        return COST * float(x.sum()) + PENALTY * (viol - self.n * TOLERANCE)

    def evaluate_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise ValueError(f"expected (B, {self.n}) bits, got {X.shape}")
        z = np.broadcast_to(self.z0, (X.shape[0], N_REPLICAS)).copy()
        viol = np.zeros(X.shape[0])
        for i in range(self.n):
            xi = X[:, i, None]
            z = self.lam[i] * (1.0 - xi) * (1.0 - z) + (1.0 - self.gam[i] * xi) * z
            viol += (z >= THRESHOLD).mean(axis=1)
        return COST * X.sum(axis=1) + PENALTY * (viol - self.n * TOLERANCE)

    def to_payload(self):
        return {
            "z0": self.z0.tolist(),
            "lam": self.lam.tolist(),
            "gam": self.gam.tolist(),
        }

    @classmethod
    def from_payload(cls, n, seed, payload):
        return cls(
            np.array(payload["z0"]),
            np.array(payload["lam"]),
            np.array(payload["gam"]),
            seed=seed,
        )
