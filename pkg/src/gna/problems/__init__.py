"""Benchmark problem registry: generators, evaluators, exact oracles."""

import json

import numpy as np
from scipy.special import logsumexp

from .contamination import ContaminationControl
from .ising import IsingSparsification
from .sat import Barthel3Sat
from .subsetsum import SubsetSum
from .xorsat import Xorsat3Reg

SCHEMA_VERSION = 1

KINDS = {
    "ising": IsingSparsification,
    "contamination": ContaminationControl,
    "3sat": Barthel3Sat,
    "xorsat": Xorsat3Reg,
    "subset_sum": SubsetSum,
}

# protocol sizes in the limited-query comparison
DEFAULT_N = {
    "ising": 24,
    "contamination": 25,
    "3sat": 25,
    "xorsat": 25,
    "subset_sum": 25,
}


def generate(kind, n, seed):
    """Deterministic instance for (kind, n, seed)."""
    if kind not in KINDS:
        raise ValueError(f"unknown problem kind {kind!r}; expected one of {sorted(KINDS)}")
    return KINDS[kind].generate(n, seed)


def all_configs(n):
    """All 2^n bit vectors; row i holds the little-endian bits of i."""
    if n > 24:
        raise ValueError("refusing to enumerate beyond n=24")
    return ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def config_index(X):
    """Inverse of all_configs row order."""
    X = np.asarray(X, dtype=np.int64)
    return X @ (np.int64(1) << np.arange(X.shape[-1], dtype=np.int64))


def exact_boltzmann_table(instance, beta):
    """p(x, beta) over all 2^n configurations, log-sum-exp normalized."""
    if instance.n > 20:
        raise ValueError(f"exact table refused for n={instance.n} > 20")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    f = instance.evaluate_batch(all_configs(instance.n))
    log_w = -beta * f
    return np.exp(log_w - logsumexp(log_w))


def save_instance(instance, path):
    """Structured-text instance file (DIMACS for 3-SAT, JSON otherwise)."""
    path = str(path)
    if instance.kind == "3sat":
        text = instance.to_dimacs()
    else:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": instance.kind,
            "n": instance.n,
            "seed": instance.seed,
            "payload": instance.to_payload(),
        }
        text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    with open(path, "w") as fh:
        fh.write(text)


def load_instance(path):
    with open(str(path)) as fh:
        text = fh.read()
    head = text.lstrip()[:1]
    if head in ("c", "p"):
        return Barthel3Sat.from_dimacs(text)
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported instance schema {doc.get('schema_version')}")
    cls = KINDS[doc["kind"]]
    return cls.from_payload(doc["n"], doc["seed"], doc["payload"])
