"""3-regular 3-XORSAT: n parity clauses, every variable in exactly 3.

Clauses come from the configuration model (three stubs per variable,
shuffled, grouped in triples); draws with a repeated variable inside a
clause or a repeated clause are rejected and regenerated with an
incremented sub-seed. Parities are set by the planted assignment.
"""

import numpy as np

MAX_ATTEMPTS = 1000


class Xorsat3Reg:
    kind = "xorsat"

    def __init__(self, n, triples, parity, planted, seed=None):
        self.n = int(n)
        self.triples = np.asarray(triples, dtype=np.int64)
        self.parity = np.asarray(parity, dtype=np.uint8)
        self.planted = np.asarray(planted, dtype=np.uint8)
        if self.triples.shape != (self.n, 3):
            raise ValueError("3-regular instance needs (n, 3) clauses")
        self.m = self.n
        self.seed = seed

    @classmethod
    def generate(cls, n, seed):
        if n < 4:
            raise ValueError("need n >= 4 for distinct 3-variable clauses")
        rng = np.random.default_rng(seed)
        planted = rng.integers(0, 2, n, dtype=np.uint8)
        for attempt in range(MAX_ATTEMPTS):
            sub = np.random.default_rng([0 if seed is None else seed, attempt])
            stubs = sub.permutation(np.repeat(np.arange(n), 3))
            triples = stubs.reshape(n, 3)
            if (np.diff(np.sort(triples, axis=1), axis=1) == 0).any():
                continue  # variable repeated inside a clause
            canon = np.sort(triples, axis=1)
            if np.unique(canon, axis=0).shape[0] != n:
                continue  # duplicate clause
            parity = (planted[triples].sum(axis=1) % 2).astype(np.uint8)
            return cls(n, triples, parity, planted, seed=seed)
        raise RuntimeError(
            f"no valid 3-regular configuration after {MAX_ATTEMPTS} attempts"
        )

    def evaluate(self, x):
        x = np.asarray(x, dtype=np.uint8)
        if x.shape != (self.n,):
            raise ValueError(f"expected {self.n} bits, got shape {x.shape}")
        unsat = (x[self.triples].sum(axis=1) % 2) != self.parity
        return float(unsat.sum())

    def evaluate_batch(self, X):
        X = np.asarray(X, dtype=np.uint8)
        unsat = (X[:, self.triples].sum(axis=2) % 2) != self.parity
        return unsat.sum(axis=1).astype(np.float64)

    def degrees(self):
        return np.bincount(self.triples.reshape(-1), minlength=self.n)

    def to_payload(self):
        return {
            "triples": self.triples.tolist(),
            "parity": self.parity.tolist(),
            "planted": self.planted.tolist(),
        }

    @classmethod
    def from_payload(cls, n, seed, payload):
        return cls(
            n,
            np.array(payload["triples"]),
            np.array(payload["parity"]),
            np.array(payload["planted"]),
            seed=seed,
        )
