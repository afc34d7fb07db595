"""Planted 3-SAT with zero mean local field (clause ratio 4.3).

Each clause picks 3 distinct variables and a negation pattern that the
planted assignment satisfies. Patterns are drawn only from the classes
with exactly one or exactly two plant-satisfied literals, each class
with probability 1/2: in the plant gauge a clause then contributes
(+1-1-1) or (+1+1-1) to the per-variable signed field, so the expected
local field is zero and local search gets no pull toward the plant.
"""

import numpy as np

ALPHA = 4.3


class Barthel3Sat:
    kind = "3sat"

    def __init__(self, n, var_idx, negated, planted, seed=None):
        self.n = int(n)
        self.var_idx = np.asarray(var_idx, dtype=np.int64)
        self.negated = np.asarray(negated, dtype=np.uint8)
        self.planted = np.asarray(planted, dtype=np.uint8)
        if self.var_idx.shape != self.negated.shape or self.var_idx.shape[1] != 3:
            raise ValueError("clauses must be (m, 3) variable indices + signs")
        if self.planted.shape != (self.n,):
            raise ValueError("planted assignment length mismatch")
        self.m = self.var_idx.shape[0]
        self.seed = seed

    @classmethod
    def generate(cls, n, seed):
        if n < 3:
            raise ValueError("need n >= 3 variables")
        rng = np.random.default_rng(seed)
        planted = rng.integers(0, 2, n, dtype=np.uint8)
        m = int(round(ALPHA * n))
        var_idx = np.empty((m, 3), dtype=np.int64)
        for c in range(m):
            var_idx[c] = rng.choice(n, size=3, replace=False)
        # class: number of plant-satisfied literals (1 or 2, equiprobable)
        n_sat = rng.integers(1, 3, m)
        special = rng.integers(0, 3, m)  # the lone (un)satisfied position
        pos = np.arange(3)
        sat_mask = np.where(
            (n_sat == 1)[:, None], pos == special[:, None], pos != special[:, None]
        )
        plant_bits = planted[var_idx]
        # literal satisfied by plant  <=>  negated == 1 - plant bit
        negated = np.where(sat_mask, 1 - plant_bits, plant_bits).astype(np.uint8)
        return cls(n, var_idx, negated, planted, seed=seed)

    def evaluate(self, x):
        x = np.asarray(x, dtype=np.uint8)
        if x.shape != (self.n,):
            raise ValueError(f"expected {self.n} bits, got shape {x.shape}")
        lit_true = x[self.var_idx] ^ self.negated
        return float(self.m - int(lit_true.any(axis=1).sum()))

    def evaluate_batch(self, X):
        X = np.asarray(X, dtype=np.uint8)
        lit_true = X[:, self.var_idx] ^ self.negated
        return (self.m - lit_true.any(axis=2).sum(axis=1)).astype(np.float64)

    def signed_field_per_variable(self):
        """Sum over clause slots of +1/-1 (plant-satisfied or not), per variable."""
        sat = (self.negated == (1 - self.planted[self.var_idx])).astype(np.int64)
        contrib = 2 * sat - 1
        field = np.zeros(self.n, dtype=np.int64)
        np.add.at(field, self.var_idx.reshape(-1), contrib.reshape(-1))
        return field

    def degrees(self):
        return np.bincount(self.var_idx.reshape(-1), minlength=self.n)

    # ------------------------------------------------------------- DIMACS

    def to_dimacs(self):
        lines = [
            f"c kind=3sat n={self.n} seed={self.seed}",
            "c planted=" + "".join(map(str, self.planted.tolist())),
            f"p cnf {self.n} {self.m}",
        ]
        signed = np.where(self.negated == 1, -(self.var_idx + 1), self.var_idx + 1)
        for row in signed:
            lines.append(" ".join(map(str, row.tolist())) + " 0")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dimacs(cls, text):
        planted = None
        seed = None
        n = m = None
        clauses = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("c"):
                if "planted=" in line:
                    planted = np.array(
                        [int(ch) for ch in line.split("planted=")[1].strip()],
                        dtype=np.uint8,
                    )
                if "seed=" in line:
                    tok = line.split("seed=")[1].split()[0]
                    seed = None if tok == "None" else int(tok)
                continue
            if line.startswith("p"):
                _, fmt, ns, ms = line.split()
                if fmt != "cnf":
                    raise ValueError(f"unsupported DIMACS format {fmt!r}")
                n, m = int(ns), int(ms)
                continue
            lits = [int(t) for t in line.split()]
            if lits[-1] == 0:
                lits = lits[:-1]
            if len(lits) != 3:
                raise ValueError(f"expected 3-literal clause, got {lits}")
            clauses.append(lits)
        if n is None or len(clauses) != m:
            raise ValueError("malformed DIMACS: missing header or clause count")
        arr = np.array(clauses, dtype=np.int64)
        var_idx = np.abs(arr) - 1
        negated = (arr < 0).astype(np.uint8)
        if planted is None:
            planted = np.zeros(n, dtype=np.uint8)
        return cls(n, var_idx, negated, planted, seed=seed)

    def to_payload(self):
        return {
            "var_idx": self.var_idx.tolist(),
            "negated": self.negated.tolist(),
            "planted": self.planted.tolist(),
        }

    @classmethod
    def from_payload(cls, n, seed, payload):
        return cls(
            n,
            np.array(payload["var_idx"]),
            np.array(payload["negated"]),
            np.array(payload["planted"]),
            seed=seed,
        )
