"""Per-query / per-step run records with a CSV round trip.

Columns: m, f, best_f, beta, elapsed_s. best_f is maintained on append,
so it is monotone nonincreasing by construction.
"""

import csv

import numpy as np


class RunHistory:
    COLUMNS = ("m", "f", "best_f", "beta", "elapsed_s")

    def __init__(self, seed=None, meta=None):
        self.seed = seed
        self.meta = dict(meta or {})
        self.rows = []
        self.xs = []  # queried configs where applicable; not serialized

    def append(self, m, f, beta, elapsed_s, x=None):
        best = min(self.rows[-1][2], f) if self.rows else f
        self.rows.append((int(m), float(f), float(best), float(beta), float(elapsed_s)))
        self.xs.append(None if x is None else np.asarray(x, dtype=np.uint8))

    def __len__(self):
        return len(self.rows)

    @property
    def best_f(self):
        if not self.rows:
            raise ValueError("empty history")
        return self.rows[-1][2]

    def column(self, name):
        i = self.COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self, path):
        with open(str(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for m, f, best, beta, el in self.rows:
                w.writerow([m, repr(f), repr(best), repr(beta), repr(el)])

    @classmethod
    def from_csv(cls, path):
        hist = cls()
        with open(str(path), newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if tuple(header) != cls.COLUMNS:
                raise ValueError(f"unexpected CSV header {header}")
            for row in r:
                hist.rows.append(
                    (int(row[0]), float(row[1]), float(row[2]), float(row[3]), float(row[4]))
                )
                hist.xs.append(None)
        return hist
