"""Replay buffer of all past black-box evaluations, split train/validation."""

import numpy as np

SPLITS = ("train", "validation")


class ReplayBuffer:
    def __init__(self):
        self._x = []
        self._f = []
        self._split = []
        self._best_idx = None

    def __len__(self):
        return len(self._x)

    def add(self, x, f, split):
        if split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
        x = np.asarray(x, dtype=np.uint8).copy()
        f = float(f)
        self._x.append(x)
        self._f.append(f)
        self._split.append(split)
        if self._best_idx is None or f < self._f[self._best_idx]:
            self._best_idx = len(self._f) - 1

    def insert_with_rule(self, x, f, rng, p_train=0.9):
        """Training split with probability p_train; an improvement on the
        incumbent best always goes to training."""
        improves = self._best_idx is None or f < self._f[self._best_idx]
        split = "train" if improves or rng.random() < p_train else "validation"
        self.add(x, f, split)
        return split

    @property
    def best(self):
        """(x, f) of the minimal-f entry."""
        if self._best_idx is None:
            raise ValueError("empty buffer")
        return self._x[self._best_idx], self._f[self._best_idx]

    def count(self, split):
        return sum(1 for s in self._split if s == split)

    def contains(self, x):
        key = np.asarray(x, dtype=np.uint8).tobytes()
        return any(key == xi.tobytes() for xi in self._x)

    def split_arrays(self, split, dedup=True):
        """(X, f) for one split; duplicates collapse to their first copy."""
        xs, fs, seen = [], [], set()
        for x, f, s in zip(self._x, self._f, self._split):
            if s != split:
                continue
            if dedup:
                key = x.tobytes()
                if key in seen:
                    continue
                seen.add(key)
            xs.append(x)
            fs.append(f)
        if not xs:
            return np.zeros((0, 0), dtype=np.uint8), np.zeros(0)
        return np.stack(xs), np.array(fs)
