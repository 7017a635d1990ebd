"""``hgr`` command line: compute, scan, detect, determinism, bench, inspect, train.

Every command prints one JSON envelope on stdout::

    {command, version, input_sha256, config, results, timings_ms}

``results`` is a pure function of the input bytes, config and seeds; anything
wall-clock related lives under ``timings_ms``.  Exit codes: 0 ok, 2 input
error, 3 numerical failure (with a JSON error object on stderr).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from hgrkb import __version__
from hgrkb.baselines import RdcConfig, rdc
from hgrkb.correlation import (
    DegreeConfig,
    SolverConfig,
    degree_scan,
    hgr_kb,
    hgr_sk,
    monotonicity_violations,
    pearson,
)
from hgrkb.datagen import RELATIONS, SyntheticSpec, generate, oracle_correlation
from hgrkb.errors import HgrError
from hgrkb.fairtrain import TrainConfig, cross_validate, fairness_dataset, load_csv
from hgrkb.kernelspace import expand

EXIT_INPUT = 2
EXIT_NUMERIC = 3
METHODS = ("pearson", "kb", "sk", "rdc")


class InputError(HgrError):
    pass


def _threads() -> int:
    env = os.environ.get("HGR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"HGR_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _pool_map(fn, items):
    items = list(items)
    workers = min(_threads(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, allow_nan=False)


def _pair_list(text, cast=int, size=2):
    try:
        vals = [cast(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"cannot parse {text!r}")
    if len(vals) != size:
        raise InputError(f"expected {size} comma-separated values, got {text!r}")
    return vals


def _list(text, cast=str):
    try:
        return [cast(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"cannot parse list {text!r}")


def _sha(*arrays) -> str:
    h = hashlib.sha256()
    for arr in arrays:
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return h.hexdigest()


def load_pair(args):
    """Resolve ``--input`` / ``--synthetic`` into ``(a, b, sha256, source)``."""
    if bool(args.input) == bool(args.synthetic):
        raise InputError("give exactly one of --input or --synthetic")
    if args.synthetic:
        spec = SyntheticSpec.parse(args.synthetic)
        a, b = generate(spec)
        return a, b, _sha(a, b), {"synthetic": spec.label()}
    try:
        with open(args.input, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(str(exc))
    frame = pd.read_csv(args.input)
    cols = _list(args.columns) if args.columns else (["a", "b"] if {"a", "b"} <= set(frame.columns) else list(frame.columns[:2]))
    if len(cols) != 2 or any(c not in frame.columns for c in cols):
        raise InputError(f"columns {cols} not found in {args.input}")
    try:
        a = frame[cols[0]].to_numpy(dtype=np.float64)
        b = frame[cols[1]].to_numpy(dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"non-numeric data: {exc}")
    return a, b, hashlib.sha256(raw).hexdigest(), {"input": os.path.basename(args.input), "columns": cols}


def run_method(method, a, b, degrees=(5, 5), degree=5, seed=0, projections=20):
    if method == "pearson":
        return {"value": pearson(a, b)}
    if method == "kb":
        return hgr_kb(a, b, DegreeConfig(*degrees)).as_dict()
    if method == "sk":
        return hgr_sk(a, b, degree).as_dict()
    if method == "rdc":
        return {"value": rdc(a, b, RdcConfig(seed=seed, n_projections=projections))}
    raise InputError(f"unknown method {method!r}")


def envelope(command, sha, config, results, timings):
    return {
        "command": command,
        "version": __version__,
        "input_sha256": sha,
        "config": config,
        "results": results,
        "timings_ms": timings,
    }


def _ms(t0):
    return 1000.0 * (time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_compute(args):
    a, b, sha, source = load_pair(args)
    degrees = _pair_list(args.degrees)
    t0 = time.perf_counter()
    res = run_method(args.method, a, b, degrees, args.degree, args.seed, args.projections)
    config = {**source, "method": args.method, "degrees": degrees, "degree": args.degree, "seed": args.seed}
    return envelope("compute", sha, config, res, {"total": _ms(t0)})


def cmd_scan(args):
    a, b, sha, source = load_pair(args)
    H, K = _pair_list(args.max_degrees)
    t0 = time.perf_counter()
    grid, times = degree_scan(a, b, H, K, with_timings=True)
    violations = monotonicity_violations(grid, 1e-6)
    for v in violations:
        print(f"warning: monotonicity violated between {v[:2]} and {v[2:]}", file=sys.stderr)
    if args.csv_out:
        with open(args.csv_out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["h\\k", *range(1, K + 1)])
            for i, row in enumerate(grid, start=1):
                w.writerow([i, *(repr(float(x)) for x in row)])
    results = {
        "grid": grid,
        "pearson": abs(pearson(a, b)),
        "monotone": not violations,
        "violations": violations,
    }
    return envelope("scan", sha, {**source, "max_degrees": [H, K]}, results, {"total": _ms(t0), "cells": 1000.0 * times})


def _detect_item(item):
    relation, sigma, seed, method, run, cfg = item
    spec = SyntheticSpec(relation, cfg["n"], sigma, seed)
    a, b = generate(spec)
    t0 = time.perf_counter()
    value = run_method(method, a, b, cfg["degrees"], cfg["degree"], seed=1000 * seed + run)["value"]
    elapsed = _ms(t0)
    return {
        "relation": relation,
        "sigma": sigma,
        "seed": seed,
        "method": method,
        "run": run,
        "value": value,
        "oracle": oracle_correlation(spec, a, b),
    }, elapsed


def cmd_detect(args):
    relations = _list(args.relations)
    for r in relations:
        if r not in RELATIONS:
            raise InputError(f"unknown relation {r!r}")
    sigmas = _list(args.sigmas, float)
    methods = _list(args.methods)
    for m in methods:
        if m not in METHODS:
            raise InputError(f"unknown method {m!r}")
    cfg = {"n": args.n, "degrees": _pair_list(args.degrees), "degree": args.degree}
    items = [
        (r, s, seed, m, run, cfg)
        for r in relations
        for s in sigmas
        for seed in range(args.seeds)
        for m in methods
        for run in range(args.runs)
    ]
    t0 = time.perf_counter()
    out = _pool_map(_detect_item, items)
    rows = [o[0] for o in out]
    times = [o[1] for o in out]
    summary = []
    for r in relations:
        for s in sigmas:
            for m in methods:
                sel = [x for x in rows if x["relation"] == r and x["sigma"] == s and x["method"] == m]
                vals = np.array([x["value"] for x in sel])
                per_seed = [_spread([x["value"] for x in sel if x["seed"] == seed]) for seed in range(args.seeds)]
                summary.append({
                    "relation": r,
                    "sigma": s,
                    "method": m,
                    "mean": float(vals.mean()),
                    "std": float(vals.std()),
                    "algorithmic_std": float(np.mean(per_seed)),
                    "oracle_mean": float(np.mean([x["oracle"] for x in sel])),
                })
    config = {
        "relations": relations,
        "sigmas": sigmas,
        "seeds": args.seeds,
        "runs": args.runs,
        "methods": methods,
        **cfg,
    }
    runtime = {}
    for m in methods:
        runtime[m] = float(np.median([t for x, t in zip(rows, times) if x["method"] == m]))
    return envelope("detect", _sha(np.array(sigmas)), config, {"rows": rows, "summary": summary}, {"total": _ms(t0), "median_per_method": runtime})


def _spread(values) -> float:
    # std about the first value: exactly zero when all runs agree bitwise
    v = np.asarray(values, dtype=float)
    return float((v - v[0]).std())


def cmd_determinism(args):
    a, b, sha, source = load_pair(args)
    methods = _list(args.methods)
    for m in methods:
        if m not in METHODS:
            raise InputError(f"unknown method {m!r}")
    t0 = time.perf_counter()
    results = {}
    for m in methods:
        vals = _pool_map(lambda run: run_method(m, a, b, _pair_list(args.degrees), args.degree, seed=run)["value"], range(args.runs))
        vals = np.array(vals)
        results[m] = {
            "values": vals,
            "mean": float(vals.mean()),
            "std": _spread(vals),
            "identical": bool(np.all(vals == vals[0])),
        }
    return envelope("determinism", sha, {**source, "runs": args.runs, "methods": methods}, results, {"total": _ms(t0)})


def bench_sizes(sizes, degree=5, repeats=5, seed=0, max_iter=500):
    """Median wall-clock (seconds) of HGR-SK and refinement-path HGR-KB per sample size."""
    table = []
    for n in sizes:
        a, b = generate(SyntheticSpec("quadratic", n, 0.1, seed))
        sk_t, kb_t, eig_t = [], [], []
        refine = SolverConfig(method="refine", max_iter=max_iter)
        for _ in range(repeats):
            t0 = time.perf_counter()
            hgr_sk(a, b, degree)
            sk_t.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            hgr_kb(a, b, (degree, degree), refine)
            kb_t.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            hgr_kb(a, b, (degree, degree))
            eig_t.append(time.perf_counter() - t0)
        sk, kb = float(np.median(sk_t)), float(np.median(kb_t))
        table.append({"n": n, "sk_median_s": sk, "kb_refine_median_s": kb, "kb_eigen_median_s": float(np.median(eig_t)), "ratio": kb / sk})
    return table


def cmd_bench(args):
    sizes = _list(args.sizes, int)
    if args.repeats < 1 or not sizes:
        raise InputError("need at least one size and one repeat")
    t0 = time.perf_counter()
    table = bench_sizes(sizes, args.degree, args.repeats, args.seed)
    config = {"sizes": sizes, "degree": args.degree, "repeats": args.repeats, "seed": args.seed}
    return envelope("bench", _sha(np.array(sizes, dtype=float)), config, {"table": table}, {"total": _ms(t0)})


def inspect_kernels(a, b, degrees, test_split=0.0, seed=0):
    """Fit HGR-KB kernels (optionally on a train portion) and project every point."""
    n = a.size
    idx = np.arange(n)
    if test_split > 0:
        if not 0 < test_split < 1:
            raise InputError("--test-split must lie in (0, 1)")
        idx = np.random.default_rng(seed).permutation(n)
    n_test = int(round(test_split * n))
    tr, te = np.sort(idx[: n - n_test]), np.sort(idx[n - n_test:])
    res = hgr_kb(a[tr], b[tr], DegreeConfig(*degrees))
    Ka, Kb = expand(a[tr], degrees[0]), expand(b[tr], degrees[1])
    f, g = Ka.transform(a) @ res.alpha, Kb.transform(b) @ res.beta
    out = {
        "alpha": res.alpha,
        "beta": res.beta,
        "value": res.value,
        "train_correlation": pearson(f[tr], g[tr]),
        "split": np.where(np.isin(np.arange(n), te), "test", "train").tolist(),
        "f": f,
        "g": g,
    }
    if n_test:
        out["test_correlation"] = pearson(f[te], g[te])
        out["gap"] = abs(out["train_correlation"] - out["test_correlation"])
    return out


def cmd_inspect(args):
    a, b, sha, source = load_pair(args)
    degrees = _pair_list(args.degrees)
    t0 = time.perf_counter()
    out = inspect_kernels(a, b, degrees, args.test_split, args.seed)
    points = {"a": a, "b": b, "f": out.pop("f"), "g": out.pop("g"), "split": out.pop("split")}
    if args.csv_out:
        with open(args.csv_out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["a", "b", "f_a", "g_b", "split"])
            for row in zip(points["a"], points["b"], points["f"], points["g"], points["split"]):
                w.writerow([*(repr(float(x)) for x in row[:4]), row[4]])
    else:
        out["points"] = points
    config = {**source, "degrees": degrees, "test_split": args.test_split, "seed": args.seed}
    return envelope("inspect", sha, config, out, {"total": _ms(t0)})


def cmd_train(args):
    if args.data.endswith(".csv") or os.path.exists(args.data):
        if not args.schema:
            raise InputError("--schema is required for CSV data")
        with open(args.data, "rb") as fh:
            sha = hashlib.sha256(fh.read()).hexdigest()
        ds = load_csv(args.data, args.schema)
    else:
        parts = args.data.split(":")
        if parts[0] != "fairness":
            raise InputError(f"unknown dataset {args.data!r}")
        opts = dict(p.split("=", 1) for p in parts[1:])
        ds = fairness_dataset(int(opts.get("n", 2000)), int(opts.get("seed", 0)))
        sha = _sha(ds.features, ds.target, ds.protected)
    cfg = TrainConfig(
        tau=args.tau,
        penalizer=args.penalizer,
        degrees=tuple(_pair_list(args.degrees)),
        degree=args.degree,
        primal_lr=args.primal_lr,
        dual_lr=args.dual_lr,
        epochs=args.epochs,
        seed=args.seed,
    )
    t0 = time.perf_counter()
    cv = cross_validate(ds, cfg, args.folds)
    fold_times = [row.pop("time") for row in cv["folds"]]
    cv["summary"].pop("time")
    config = {
        "data": args.data,
        "schema": args.schema,
        "penalizer": cfg.penalizer,
        "tau": cfg.tau,
        "folds": args.folds,
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "degrees": list(cfg.degrees),
        "degree": cfg.degree,
        "primal_lr": cfg.primal_lr,
        "dual_lr": cfg.dual_lr,
    }
    timings = {"total": _ms(t0), "folds": [1000.0 * t for t in fold_times], "mean": 1000.0 * float(np.mean(fold_times)), "std": 1000.0 * float(np.std(fold_times))}
    return envelope("train", sha, config, cv, timings)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_input(p):
    p.add_argument("--input", help="CSV file with a header row")
    p.add_argument("--columns", help="two column names to read from --input (default a,b or the first two)")
    p.add_argument("--synthetic", help="relation:n=..:sigma=..[:seed=..]")


def build_parser():
    parser = argparse.ArgumentParser(prog="hgr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="one indicator value")
    _add_input(p)
    p.add_argument("--method", choices=METHODS, default="kb")
    p.add_argument("--degrees", default="5,5")
    p.add_argument("--degree", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--projections", type=int, default=20)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("scan", help="HGR-KB over a grid of kernel degrees")
    _add_input(p)
    p.add_argument("--max-degrees", default="5,5")
    p.add_argument("--csv-out")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("detect", help="indicators vs oracle on synthetic relations")
    p.add_argument("--relations", default=",".join(RELATIONS))
    p.add_argument("--sigmas", default="0,0.1,0.5,1.0")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--runs", type=int, default=3, help="repetitions per data seed (varies the RDC seed)")
    p.add_argument("--methods", default="pearson,kb,sk,rdc")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--degrees", default="5,5")
    p.add_argument("--degree", type=int, default=5)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("determinism", help="repeat each method with distinct seeds")
    _add_input(p)
    p.add_argument("--runs", type=int, default=30)
    p.add_argument("--methods", default="kb,sk,rdc")
    p.add_argument("--degrees", default="5,5")
    p.add_argument("--degree", type=int, default=5)
    p.set_defaults(func=cmd_determinism)

    p = sub.add_parser("bench", help="least-squares HGR-SK vs iterative HGR-KB timing")
    p.add_argument("--sizes", default="1000,10000")
    p.add_argument("--degree", type=int, default=5)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("inspect", help="fitted kernel coefficients and projected points")
    _add_input(p)
    p.add_argument("--degrees", default="5,5")
    p.add_argument("--test-split", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv-out")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("train", help="k-fold constrained training")
    p.add_argument("--data", required=True, help="CSV path or fairness[:n=..][:seed=..]")
    p.add_argument("--schema", help="target=NAME,protected=NAME,categorical=NAME,...")
    p.add_argument("--penalizer", choices=("hgr_kb", "hgr_sk", "none"), default="hgr_kb")
    p.add_argument("--tau", type=float, default=0.3)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--degrees", default="5,5")
    p.add_argument("--degree", type=int, default=5)
    p.add_argument("--primal-lr", type=float, default=1e-3)
    p.add_argument("--dual-lr", type=float, default=1e-3)
    p.set_defaults(func=cmd_train)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    # LinAlgError subclasses ValueError, so it must be caught first
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": EXIT_NUMERIC}), file=sys.stderr)
        return EXIT_NUMERIC
    except (HgrError, ValueError, KeyError, OSError) as exc:
        print(dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": EXIT_INPUT}), file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(dumps(report) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
