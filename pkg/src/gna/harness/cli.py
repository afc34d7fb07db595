"""Command line entry point.

Subcommands: generate | run | report | analyze. Every flag can also be
supplied through a JSON config file (--config); explicit flags win over
config values, which win over built-in defaults.

Exit codes: 0 success, 1 run failure, 2 usage error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..model import GNAModel
from ..problems import DEFAULT_N, KINDS, load_instance
from . import exports, reporting, runner

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


def _int_list(v):
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    if isinstance(v, int):
        return [v]
    return [int(tok) for tok in str(v).split(",") if tok.strip() != ""]


def _str_list(v):
    if isinstance(v, (list, tuple)):
        return [str(x) for x in v]
    return [tok.strip() for tok in str(v).split(",") if tok.strip() != ""]


def build_parser():
    p = argparse.ArgumentParser(
        prog="gna",
        description="Generative neural annealer: benchmark instances, "
        "solver runs, reports, and attention analysis.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="JSON file of flag defaults")
        sp.add_argument("--out", help="output file or directory")

    g = sub.add_parser("generate", help="write one problem instance file")
    add_common(g)
    g.add_argument("--problem", choices=sorted(KINDS))
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int)

    r = sub.add_parser("run", help="execute solver runs and write histories")
    add_common(r)
    r.add_argument("--problem", choices=sorted(KINDS))
    r.add_argument("--n", help="size or comma list of sizes")
    r.add_argument("--seeds", "--seed", dest="seeds", help="comma list of seeds")
    r.add_argument("--solver", help="comma list from: gna-sa, gna-pt, sa")
    r.add_argument("--regime", choices=("limited", "unlimited"))
    r.add_argument("--budget", type=int, help="query budget (limited regime)")
    r.add_argument("--max-steps", type=int, help="step cap (unlimited regime)")
    r.add_argument("--beta-min", type=float)
    r.add_argument("--beta-upper", type=float)

    rep = sub.add_parser("report", help="aggregate a run directory")
    add_common(rep)
    rep.add_argument("run_dir", help="directory produced by `gna run`")

    a = sub.add_parser("analyze", help="attention-structure export")
    add_common(a)
    a.add_argument("--checkpoint", help="model .npz written by `gna run`")
    a.add_argument("--instance", help="instance file written by `gna generate`")
    a.add_argument("--beta", type=float)
    a.add_argument("--samples", type=int)
    a.add_argument("--alpha", type=float)
    a.add_argument("--path-length", type=int)
    a.add_argument("--seed", type=int)

    return p


def _merge(args, keys, defaults):
    """flag > config file > default, per key; rejects unknown config keys."""
    file_cfg = {}
    if getattr(args, "config", None):
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(file_cfg) - set(keys))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    merged = {}
    for k in keys:
        v = getattr(args, k, None)
        if v is None:
            v = file_cfg.get(k)
        if v is None:
            v = defaults.get(k)
        merged[k] = v
    return merged


def _require(merged, *keys):
    for k in keys:
        if merged[k] is None:
            raise UsageError(f"missing required option --{k.replace('_', '-')}")


def cmd_generate(args):
    m = _merge(args, ("problem", "n", "seed", "out"), {"seed": 0})
    _require(m, "problem", "out")
    if m["problem"] not in KINDS:
        raise UsageError(f"unknown problem kind {m['problem']!r}")
    n = int(m["n"]) if m["n"] is not None else DEFAULT_N[m["problem"]]
    runner.generate_instance_file(m["problem"], n, int(m["seed"]), m["out"])
    print(m["out"])
    return 0


def cmd_run(args):
    m = _merge(
        args,
        (
            "problem",
            "n",
            "seeds",
            "solver",
            "regime",
            "budget",
            "max_steps",
            "beta_min",
            "beta_upper",
            "out",
        ),
        {"regime": "limited", "budget": 200, "seeds": "0"},
    )
    _require(m, "problem", "out")
    if m["solver"] is None:
        m["solver"] = "gna-sa,gna-pt,sa" if m["regime"] == "limited" else "gna-pt"
    sizes = _int_list(m["n"]) if m["n"] is not None else [DEFAULT_N[m["problem"]]]
    try:
        spec = runner.ExperimentSpec(
            problem=m["problem"],
            sizes=sizes,
            seeds=_int_list(m["seeds"]),
            solvers=_str_list(m["solver"]),
            regime=m["regime"],
            budget=int(m["budget"]),
            max_steps=None if m["max_steps"] is None else int(m["max_steps"]),
            beta_min=None if m["beta_min"] is None else float(m["beta_min"]),
            beta_upper=None if m["beta_upper"] is None else float(m["beta_upper"]),
            out=m["out"],
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    manifest, n_failed = runner.run_experiment(spec)
    for entry in manifest["runs"]:
        log.info(
            "%s: %s%s",
            entry["name"],
            entry["status"],
            "" if entry["error"] is None else f" ({entry['error']})",
        )
    print(str(Path(spec.out) / "manifest.json"))
    if n_failed:
        print(f"{n_failed} run(s) failed", file=sys.stderr)
        return 1
    return 0


def cmd_report(args):
    m = _merge(args, ("run_dir", "out"), {})
    _require(m, "run_dir")
    try:
        written = reporting.write_report(m["run_dir"], m["out"])
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    for name in written:
        print(name)
    return 0


def cmd_analyze(args):
    m = _merge(
        args,
        ("checkpoint", "instance", "beta", "samples", "alpha", "path_length", "seed", "out"),
        {"beta": 1.0, "samples": 1000, "alpha": 0.15, "path_length": 10, "seed": 0},
    )
    _require(m, "checkpoint", "instance", "out")
    model, _ = GNAModel.load(m["checkpoint"])
    instance = load_instance(m["instance"])
    if model.cfg.n_vars != instance.n:
        raise UsageError(
            f"dimension mismatch: checkpoint has {model.cfg.n_vars} variables, "
            f"instance has {instance.n}"
        )
    try:
        summary = exports.export_analysis(
            model,
            instance,
            beta=float(m["beta"]),
            n_samples=int(m["samples"]),
            out_dir=m["out"],
            rng=np.random.default_rng(int(m["seed"])),
            alpha=float(m["alpha"]),
            l=int(m["path_length"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    r = summary["pearson_r"]
    print(f"pearson_r={'undefined' if r is None else repr(r)}")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "report": cmd_report,
    "analyze": cmd_analyze,
}


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints its own message; keep its code
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        log.exception("command failed")
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
