"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Runs every kernel under the current backend, then re-executes itself in a
subprocess with GNA_DISABLE_NUMBA flipped and prints both timings side by
side. Shapes mirror real training workloads (unlimited regime, n=20,
~2000-row unique batches).

    python3 benchmarks/bench_kernels.py [--repeats N] [--json PATH]
"""

import argparse
import json
import os
import statistics
import subprocess
import sys
import time

import numpy as np


def _bench(fn, repeats):
    fn()  # warmup; also triggers jit compilation on the numba path
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def collect(repeats):
    from gna import GNAModel, ModelConfig
    from gna import autodiff as ad
    from gna import kernels

    rng = np.random.default_rng(0)
    B, T, H = 2000, 21, 32
    x = rng.normal(size=(B, T, H))
    gamma = rng.normal(size=H)
    beta = rng.normal(size=H)
    dout = rng.normal(size=(B, T, H))
    scores = rng.normal(size=(B, T, T))
    probs = kernels.causal_softmax_fwd(scores)
    dprobs = rng.normal(size=(B, T, T))
    _, mean, rstd = kernels.layernorm_fwd(x, gamma, beta)
    f_table = rng.normal(size=1 << 12)

    model = GNAModel(ModelConfig.unlimited(20), seed=0)
    X = rng.integers(0, 2, (1000, 20)).astype(np.uint8)

    def train_step():
        for p in model.parameters().values():
            p.grad = None
        tape = ad.Tape()
        with tape:
            loss = ad.sum_(model.log_prob_tensor(X, 1.0))
        tape.backward(loss)

    cases = {
        "layernorm_fwd": lambda: kernels.layernorm_fwd(x, gamma, beta),
        "layernorm_bwd": lambda: kernels.layernorm_bwd(dout, x, gamma, mean, rstd),
        "gelu_fwd": lambda: kernels.gelu_fwd(x),
        "gelu_bwd": lambda: kernels.gelu_bwd(dout, x),
        "causal_softmax_fwd": lambda: kernels.causal_softmax_fwd(scores),
        "causal_softmax_bwd": lambda: kernels.causal_softmax_bwd(dprobs, probs),
        "metropolis_1e6_steps": lambda: kernels.metropolis_table_chain(
            f_table, 1.0, 10**6, np.random.default_rng(1)
        ),
        "model_logprob_fwd_bwd": train_step,
    }
    return kernels.BACKEND, {name: _bench(fn, repeats) for name, fn in cases.items()}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--json", help="also write results to this path")
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)

    backend, results = collect(args.repeats)
    if args.worker:
        json.dump({"backend": backend, "results": results}, sys.stdout)
        return 0

    env = dict(os.environ)
    env["GNA_DISABLE_NUMBA"] = "0" if backend == "numpy" else "1"
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker", "--repeats", str(args.repeats)],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    other = json.loads(proc.stdout)
    both = {backend: results, other["backend"]: other["results"]}
    if set(both) != {"numba", "numpy"}:
        print(f"note: both passes ran on {backend!r} (numba unavailable?)", file=sys.stderr)

    names = list(results)
    w = max(len(n) for n in names)
    print(f"{'kernel':<{w}}  {'numba (ms)':>11}  {'numpy (ms)':>11}  {'speedup':>8}")
    for name in names:
        tn = both.get("numba", {}).get(name)
        tp = both.get("numpy", {}).get(name)
        ratio = "" if not (tn and tp) else f"{tp / tn:7.2f}x"
        fmt = lambda t: "      -" if t is None else f"{1e3 * t:11.3f}"
        print(f"{name:<{w}}  {fmt(tn)}  {fmt(tp)}  {ratio:>8}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(both, fh, indent=2, sort_keys=True)
        print(f"wrote {args.json}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
