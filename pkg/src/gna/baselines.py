"""Simulated-annealing reference solver under query-budget accounting.

The chain is single-bit-flip Metropolis on a geometric beta ladder. Every
objective evaluation counts against the budget, including the one for the
starting configuration, and f is re-evaluated from scratch after each flip:
the objective is a black box, so no incremental delta tricks.

The ladder endpoints default to the same window the annealed training runs
use, which keeps the two methods comparable per query. Nothing canonical
about that choice; override via SaConfig if needed.
"""

import time
from dataclasses import dataclass

import numpy as np

from .history import RunHistory
from .kernels import metropolis_table_chain  # noqa: F401  (fixed-beta chain helper)

__all__ = ["SaConfig", "metropolis_accept", "metropolis_table_chain", "sa_run"]


@dataclass(frozen=True)
class SaConfig:
    beta0: float = 0.057
    beta_f: float = 69.7
    budget: int = 200
    flips_per_step: int = 1
    seed: int = None

    def __post_init__(self):
        if not 0.0 < self.beta0 < self.beta_f:
            raise ValueError("need 0 < beta0 < beta_f")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.flips_per_step != 1:
            raise ValueError("only single-bit-flip proposals are supported")

    def betas(self):
        """Geometric ladder, one beta per query, endpoints exact."""
        if self.budget == 1:
            return np.array([float(self.beta0)])
        t = np.arange(self.budget) / (self.budget - 1)
        out = self.beta0 * (self.beta_f / self.beta0) ** t
        out[0] = self.beta0
        out[-1] = self.beta_f
        return out


def metropolis_accept(delta_f, beta, u):
    """Accept rule min(1, exp(-beta*delta_f)) decided against uniform u."""
    return delta_f <= 0.0 or u < np.exp(-beta * delta_f)


def sa_run(instance, cfg, rng=None):
    """Anneal on a problem instance and return the per-query RunHistory.

    Row 1 is the uniform-random start; each later row is one proposed flip
    evaluated at that row's beta.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n = instance.n
    betas = cfg.betas()
    t0 = time.perf_counter()

    hist = RunHistory(seed=cfg.seed, meta={"solver": "sa", "kind": instance.kind})
    x = (rng.random(n) < 0.5).astype(np.uint8)
    f_cur = float(instance.evaluate(x))
    hist.append(1, f_cur, betas[0], time.perf_counter() - t0, x=x)

    for m in range(2, cfg.budget + 1):
        beta = betas[m - 1]
        bit = int(rng.integers(0, n))
        cand = x.copy()
        cand[bit] ^= 1
        f_cand = float(instance.evaluate(cand))
        if metropolis_accept(f_cand - f_cur, beta, rng.random()):
            x, f_cur = cand, f_cand
        hist.append(m, f_cand, beta, time.perf_counter() - t0, x=cand)

    hist.meta["final_best_f"] = hist.rows[-1][2]
    return hist
