"""Training loops for both query regimes, plus query selection and
checkpoint reversion."""

import logging
import time
from dataclasses import dataclass

import numpy as np

from ..history import RunHistory
from ..model import GNAModel, ModelConfig
from ..optim import Adam, AdamW
from .buffer import ReplayBuffer
from .losses import free_energy_gradient, partial_kl_loss
from .. import autodiff as ad

log = logging.getLogger(__name__)

REGIMES = ("limited", "unlimited")
VARIANTS = ("SA", "PT")


@dataclass
class TrainRunConfig:
    regime: str = "limited"
    variant: str = "SA"
    query_budget: int = 200
    max_steps: int = 10_000
    steps_per_query: int | None = None  # default: 5 for SA, 25 for PT
    init_random_queries: int = 20
    reversion_window: int = 20
    lr: float | None = None  # default: 8.2e-4 limited, 5e-4 unlimited
    weight_decay: float | None = None  # default: 1.5e-4 limited, 0 unlimited
    n_batch: int = 10**6
    n_unique: int = 10**3
    stop_at_solve: bool = True
    query_retry_cap: int = 10

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.steps_per_query is None:
            self.steps_per_query = 5 if self.variant == "SA" else 25
        if self.lr is None:
            self.lr = 8.2e-4 if self.regime == "limited" else 5e-4
        if self.weight_decay is None:
            self.weight_decay = 1.5e-4 if self.regime == "limited" else 0.0
        for name in (
            "query_budget",
            "max_steps",
            "steps_per_query",
            "init_random_queries",
            "reversion_window",
            "n_batch",
            "n_unique",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


def select_queries(model, schedule, buffer, rng, k=1, progress=1.0, retry_cap=10):
    """k candidates sampled at the current beta_max. Candidates already in
    the buffer are re-sampled up to retry_cap times, then kept anyway (a
    duplicate query still consumes budget)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    beta = schedule.beta_max(progress)
    seen = set()
    out = []
    for _ in range(k):
        cand = model.sample(beta, 1, rng)[0]
        for _ in range(retry_cap):
            key = cand.tobytes()
            if key not in seen and not buffer.contains(cand):
                break
            cand = model.sample(beta, 1, rng)[0]
        seen.add(cand.tobytes())
        out.append(cand)
    return out


def checkpoint_revert(checkpoints, window):
    """Checkpoint with the lowest validation loss among the most recent
    `window` entries; ties break toward the most recent. Entries are
    (checkpoint, val_loss); None losses are skipped. Returns None when
    nothing qualifies."""
    recent = list(checkpoints)[-window:]
    best = None
    for ck, loss in recent:
        if loss is None:
            continue
        if best is None or loss <= best[1]:
            best = (ck, loss)
    return None if best is None else best[0]


def _validation_loss(model, buffer, beta):
    if buffer.count("validation") < 2:
        return None
    return float(partial_kl_loss(model, buffer, beta, "validation").data)


def run_limited(instance, cfg, schedule, rng):
    """Active-learning loop against a query budget.

    20 random queries seed the replay buffer (2 held out for validation,
    the incumbent best always in training). Each subsequent query is
    sampled from the model at beta_max, every query is followed by a
    short training phase on the buffer, and every reversion_window
    queries the model rolls back to the checkpoint with the lowest
    validation loss in the window.
    """
    if cfg.regime != "limited":
        raise ValueError("config regime must be 'limited'")
    n = instance.n
    budget = cfg.query_budget
    model = GNAModel(ModelConfig.limited(n), seed=int(rng.integers(2**31)))
    opt = AdamW(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    buffer = ReplayBuffer()
    hist = RunHistory(meta={"regime": "limited", "variant": cfg.variant})
    t0 = time.monotonic()

    k0 = min(cfg.init_random_queries, budget)
    X0 = rng.integers(0, 2, (k0, n), dtype=np.int64).astype(np.uint8)
    f0 = np.array([instance.evaluate(x) for x in X0])
    # two validation entries, never the incumbent best
    val_ids = set()
    if k0 >= 3:
        candidates = np.setdiff1d(np.arange(k0), [int(np.argmin(f0))])
        val_ids = set(rng.choice(candidates, size=min(2, candidates.size), replace=False).tolist())
    for i in range(k0):
        split = "validation" if i in val_ids else "train"
        buffer.add(X0[i], f0[i], split)
        m = i + 1
        hist.append(m, f0[i], schedule.beta_max(m / budget), time.monotonic() - t0, x=X0[i])
    m = k0

    def train_phase(progress):
        if buffer.split_arrays("train")[0].shape[0] < 2:
            return
        for _ in range(cfg.steps_per_query):
            beta = schedule.draw_beta(progress, rng)
            opt.zero_grad()
            tape = ad.Tape()
            with tape:
                loss = partial_kl_loss(model, buffer, beta, "train")
            tape.backward(loss)
            opt.step()

    window = []
    train_phase(m / budget)
    window.append(
        ((model.snapshot(), opt.state_dict()), _validation_loss(model, buffer, schedule.beta_max(m / budget)))
    )

    while m < budget:
        progress = m / budget
        x = select_queries(
            model, schedule, buffer, rng, k=1, progress=progress, retry_cap=cfg.query_retry_cap
        )[0]
        try:
            f = float(instance.evaluate(x))
        except Exception:
            log.exception("objective evaluation failed at query %d", m + 1)
            hist.meta["aborted_at"] = m + 1
            return hist, model
        buffer.insert_with_rule(x, f, rng)
        m += 1
        hist.append(m, f, schedule.beta_max(progress), time.monotonic() - t0, x=x)
        train_phase(m / budget)
        window.append(
            ((model.snapshot(), opt.state_dict()), _validation_loss(model, buffer, schedule.beta_max(m / budget)))
        )
        if (m - k0) % cfg.reversion_window == 0:
            chosen = checkpoint_revert(window, cfg.reversion_window)
            if chosen is not None:
                params, opt_state = chosen
                model.restore(params)
                opt.load_state_dict(opt_state)
            window = []

    hist.meta["final_best_f"] = hist.best_f
    hist.meta["queries"] = m
    return hist, model


def run_unlimited(instance, cfg, schedule, rng):
    """Free-energy REINFORCE with unlimited objective evaluations.

    Each step draws a weighted unique-sample batch at the scheduled beta
    (SA: beta_max, PT: uniform in [beta_min, beta_max]), records the best
    objective value in the batch, and applies one gradient step. Stops
    early when f = 0 is found; meta carries steps_to_solve or failure.
    """
    if cfg.regime != "unlimited":
        raise ValueError("config regime must be 'unlimited'")
    model = GNAModel(ModelConfig.unlimited(instance.n), seed=int(rng.integers(2**31)))
    opt = Adam(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    hist = RunHistory(meta={"regime": "unlimited", "variant": cfg.variant})
    t0 = time.monotonic()
    solved_at = None
    for step in range(1, cfg.max_steps + 1):
        progress = step - 1  # schedule measured in completed steps
        beta = schedule.draw_beta(progress, rng)
        batch = model.sample_unique_reweighted(beta, cfg.n_batch, cfg.n_unique, rng)
        f_vals = instance.evaluate_batch(batch.configs)
        f_min = float(np.min(f_vals))
        hist.append(step, f_min, beta, time.monotonic() - t0)
        if f_min == 0.0 and cfg.stop_at_solve:
            solved_at = step
            break
        free_energy_gradient(model, instance, beta, batch, f_vals=f_vals)
        opt.step()
    hist.meta["solved"] = solved_at is not None
    hist.meta["steps_to_solve"] = solved_at
    hist.meta["final_best_f"] = hist.best_f
    return hist, model
