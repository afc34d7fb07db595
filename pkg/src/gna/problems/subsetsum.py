"""Subset sum at the hardness peak: n integers uniform in [1, 2^n].

f(x) = ln(|sum(a_i x_i) - T| + 1) with exact integer arithmetic; the
target T is the sum over a planted subset.
"""

import math

import numpy as np

# int64 stays exact while n * 2^n < 2^63
_VECTOR_N_MAX = 30


class SubsetSum:
    kind = "subset_sum"

    def __init__(self, a, target, planted, seed=None):
        self.a = [int(v) for v in a]
        self.target = int(target)
        self.planted = np.asarray(planted, dtype=np.uint8)
        self.n = len(self.a)
        if self.planted.shape != (self.n,):
            raise ValueError("planted assignment length mismatch")
        if any(v < 1 for v in self.a):
            raise ValueError("set elements must be positive")
        self.seed = seed

    @classmethod
    def generate(cls, n, seed):
        if n < 1:
            raise ValueError("need n >= 1")
        rng = np.random.default_rng(seed)
        nbytes = (n + 7) // 8
        # 2^n divides 2^(8*nbytes), so the modulus keeps the draw uniform
        a = [
            int.from_bytes(rng.bytes(nbytes), "little") % (1 << n) + 1
            for _ in range(n)
        ]
        planted = rng.integers(0, 2, n, dtype=np.uint8)
        target = sum(ai for ai, p in zip(a, planted) if p)
        return cls(a, target, planted, seed=seed)

    def evaluate(self, x):
        x = np.asarray(x)
        if x.shape != (self.n,):
            raise ValueError(f"expected {self.n} bits, got shape {x.shape}")
        total = sum(ai for ai, b in zip(self.a, x.tolist()) if b)
        return math.log(abs(total - self.target) + 1)

    def evaluate_batch(self, X):
        X = np.asarray(X)
        if self.n <= _VECTOR_N_MAX:
            a64 = np.array(self.a, dtype=np.int64)
            diff = np.abs(X.astype(np.int64) @ a64 - np.int64(self.target))
            return np.log(diff.astype(np.float64) + 1.0)
        return np.array([self.evaluate(row) for row in X])

    def to_payload(self):
        return {
            "a": [str(v) for v in self.a],
            "target": str(self.target),
            "planted": self.planted.tolist(),
        }

    @classmethod
    def from_payload(cls, n, seed, payload):
        return cls(
            [int(v) for v in payload["a"]],
            int(payload["target"]),
            np.array(payload["planted"]),
            seed=seed,
        )
