"""Experiment execution: instance generation, solver fanout, manifests.

Each (size, solver, seed) cell is one independent run: the seed generates
the instance, and a (seed, solver, size)-keyed PCG64 stream drives the
solver, so results are reproducible run by run no matter how the cells are
distributed over workers.
"""

import json
import logging
import os
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..baselines import SaConfig, sa_run
from ..kernels import BACKEND
from ..problems import DEFAULT_N, KINDS, generate, save_instance
from ..training import AnnealSchedule, TrainRunConfig, run_limited, run_unlimited

log = logging.getLogger(__name__)

SOLVERS = ("gna-sa", "gna-pt", "sa")
REGIMES = ("limited", "unlimited")
WORKERS_ENV = "GNA_WORKERS"

# stable sub-stream keys so adding a solver never shifts existing streams
_SOLVER_STREAM = {"sa": 0, "gna-sa": 1, "gna-pt": 2}


def default_max_steps(kind, n):
    """Step cap for unlimited runs: n^3/8 on 3-SAT, 1e4 elsewhere."""
    return max(1, n**3 // 8) if kind == "3sat" else 10_000


@dataclass
class ExperimentSpec:
    problem: str
    sizes: tuple
    seeds: tuple
    solvers: tuple
    regime: str = "limited"
    budget: int = 200
    max_steps: int = None  # None: per-problem default
    beta_min: float = None  # None: regime default
    beta_upper: float = None
    out: Path = Path(".")

    def __post_init__(self):
        self.problem = str(self.problem)
        self.sizes = tuple(int(v) for v in self.sizes)
        self.seeds = tuple(int(v) for v in self.seeds)
        self.solvers = tuple(self.solvers)
        self.out = Path(self.out)
        if self.problem not in KINDS:
            raise ValueError(f"unknown problem kind {self.problem!r}")
        if not self.seeds:
            raise ValueError("seed list must be nonempty")
        if not self.sizes:
            raise ValueError("size list must be nonempty")
        for s in self.solvers:
            if s not in SOLVERS:
                raise ValueError(f"unknown solver {s!r}")
        if not self.solvers:
            raise ValueError("solver list must be nonempty")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")
        if self.regime == "unlimited" and "sa" in self.solvers:
            raise ValueError("plain 'sa' has no unlimited-regime mode")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")

    def run_name(self, n, solver, seed):
        return f"{self.problem}_n{n}_{solver}_seed{seed}"

    def tasks(self):
        for n in self.sizes:
            for solver in self.solvers:
                for seed in self.seeds:
                    yield {
                        "kind": self.problem,
                        "n": n,
                        "seed": seed,
                        "solver": solver,
                        "regime": self.regime,
                        "budget": self.budget,
                        "max_steps": self.max_steps,
                        "beta_min": self.beta_min,
                        "beta_upper": self.beta_upper,
                        "out": str(self.out),
                        "name": self.run_name(n, solver, seed),
                    }


def _solver_stream(seed, solver, n):
    return np.random.default_rng([int(seed), _SOLVER_STREAM[solver], int(n)])


def run_task(task):
    """Execute one (size, solver, seed) cell and write its artifacts.

    Returns a manifest entry; never raises (failures are recorded so the
    remaining cells still run).
    """
    name = task["name"]
    out = Path(task["out"])
    entry = {
        "name": name,
        "solver": task["solver"],
        "seed": task["seed"],
        "n": task["n"],
        "csv": name + ".csv",
        "checkpoint": None,
        "status": "ok",
        "error": None,
    }
    try:
        inst = generate(task["kind"], task["n"], seed=task["seed"])
        rng = _solver_stream(task["seed"], task["solver"], task["n"])
        if task["solver"] == "sa":
            cfg = SaConfig(
                beta0=task["beta_min"] if task["beta_min"] is not None else 0.057,
                beta_f=task["beta_upper"] if task["beta_upper"] is not None else 69.7,
                budget=task["budget"],
                seed=task["seed"],
            )
            hist = sa_run(inst, cfg, rng)
            model = None
        else:
            variant = "SA" if task["solver"] == "gna-sa" else "PT"
            hist, model = _run_gna(inst, task, variant, rng)
        hist.to_csv(out / entry["csv"])
        if model is not None:
            entry["checkpoint"] = name + ".npz"
            model.save(out / entry["checkpoint"], rng=rng)
        entry["final_best_f"] = hist.rows[-1][2]
        for key in ("solved", "steps_to_solve", "aborted_at"):
            if key in hist.meta:
                entry[key] = hist.meta[key]
    except Exception as exc:
        log.exception("run %s failed", name)
        entry["status"] = "failed"
        entry["error"] = f"{type(exc).__name__}: {exc}"
        entry["traceback"] = traceback.format_exc()
    return entry


def _run_gna(inst, task, variant, rng):
    if task["regime"] == "limited":
        schedule = AnnealSchedule.limited(
            variant,
            beta_min=task["beta_min"] if task["beta_min"] is not None else 0.057,
            beta_upper=task["beta_upper"] if task["beta_upper"] is not None else 69.7,
        )
        cfg = TrainRunConfig(
            regime="limited", variant=variant, query_budget=task["budget"]
        )
        return run_limited(inst, cfg, schedule, rng)
    schedule = AnnealSchedule.unlimited(
        variant,
        beta_min=task["beta_min"] if task["beta_min"] is not None else 0.1,
        beta_upper=task["beta_upper"] if task["beta_upper"] is not None else 100.0,
    )
    steps = task["max_steps"]
    if steps is None:
        steps = default_max_steps(task["kind"], task["n"])
    cfg = TrainRunConfig(regime="unlimited", variant=variant, max_steps=steps)
    return run_unlimited(inst, cfg, schedule, rng)


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer %s=%r", WORKERS_ENV, raw)
        return 1


def manifest_dict(spec, entries):
    """Everything that can influence the numbers, in one diffable blob."""
    resolved_steps = {
        str(n): (
            spec.max_steps
            if spec.max_steps is not None
            else default_max_steps(spec.problem, n)
        )
        for n in spec.sizes
    }
    per_solver = {}
    for solver in spec.solvers:
        if solver == "sa":
            cfg = SaConfig(
                beta0=spec.beta_min if spec.beta_min is not None else 0.057,
                beta_f=spec.beta_upper if spec.beta_upper is not None else 69.7,
                budget=spec.budget,
            )
            per_solver[solver] = {
                "beta0": cfg.beta0,
                "beta_f": cfg.beta_f,
                "budget": cfg.budget,
                "flips_per_step": cfg.flips_per_step,
                "schedule": "geometric",
            }
        else:
            variant = "SA" if solver == "gna-sa" else "PT"
            if spec.regime == "limited":
                sched = AnnealSchedule.limited(
                    variant,
                    beta_min=spec.beta_min if spec.beta_min is not None else 0.057,
                    beta_upper=spec.beta_upper if spec.beta_upper is not None else 69.7,
                )
                cfg = TrainRunConfig(
                    regime="limited", variant=variant, query_budget=spec.budget
                )
            else:
                sched = AnnealSchedule.unlimited(
                    variant,
                    beta_min=spec.beta_min if spec.beta_min is not None else 0.1,
                    beta_upper=spec.beta_upper if spec.beta_upper is not None else 100.0,
                )
                cfg = TrainRunConfig(regime="unlimited", variant=variant)
            per_solver[solver] = {
                "schedule": {
                    "variant": sched.variant,
                    "beta_min": sched.beta_min,
                    "beta_start": sched.beta_start,
                    "beta_upper": sched.beta_upper,
                    "ramp": sched.ramp,
                },
                "train_config": {
                    k: v for k, v in vars(cfg).items() if not k.startswith("_")
                },
            }
    return {
        "format": 1,
        "version": __version__,
        "kernel_backend": BACKEND,
        "rng": "numpy.random.default_rng (PCG64); instance stream keyed by seed, "
        "solver stream keyed by (seed, solver-id, n)",
        "solver_stream_ids": dict(_SOLVER_STREAM),
        "workers_env": WORKERS_ENV,
        "workers": worker_count(),
        "spec": {
            "problem": spec.problem,
            "sizes": list(spec.sizes),
            "seeds": list(spec.seeds),
            "solvers": list(spec.solvers),
            "regime": spec.regime,
            "budget": spec.budget,
            "max_steps": resolved_steps,
            "beta_min": spec.beta_min,
            "beta_upper": spec.beta_upper,
        },
        "solver_configs": per_solver,
        "runs": entries,
    }


def run_experiment(spec):
    """Fan the spec's cells out over workers; returns (manifest, n_failed).

    The manifest is also written to <out>/manifest.json.
    """
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = list(spec.tasks())
    workers = worker_count()
    if workers > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(run_task, tasks))
    else:
        entries = [run_task(t) for t in tasks]
    manifest = manifest_dict(spec, entries)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    n_failed = sum(1 for e in entries if e["status"] != "ok")
    return manifest, n_failed


def generate_instance_file(kind, n, seed, out):
    if kind not in KINDS:
        raise ValueError(f"unknown problem kind {kind!r}")
    inst = generate(kind, n if n is not None else DEFAULT_N[kind], seed=seed)
    save_instance(inst, out)
    return inst
