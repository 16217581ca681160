"""Benchmark grids: generate models, run algorithms, score and persist.

A grid is a JSON document::

    {
      "schema_version": 1,
      "master_seed": 0,
      "replicates": 100,
      "time_limit": 600,
      "generators": [{"p": 10, "s": [1, 2, 3], "n": [null]}],
      "algorithms": [{"algo": "triangle-sp", "depth": 4, "runs": 10, "lambda": 0.001},
                     {"algo": "pc", "lambda": 0.001}]
    }

List-valued fields expand into separate cells.  ``n: null`` means the exact
covariance is used; then ``lambda`` thresholds partial correlations, or
``"ci": "dsep"`` asks for d-separation in the true DAG.  With samples,
``alpha`` sets the Fisher z level.

Every random draw is derived from ``master_seed`` and the cell/replicate
indices, so reruns of a grid reproduce ``trials.csv`` byte for byte.  Wall
times go to a separate ``timings.csv`` for that reason.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from itertools import product
from pathlib import Path

import numpy as np

from ..ci import DSepOracle, GaussianOracle
from ..search import SearchConfig
from .metrics import format_pdag_compact, recovery
from .sem import random_gaussian_dag, sem_covariance_and_sample

SCHEMA_VERSION = 1
WORKERS_ENV = "GREEDYSP_WORKERS"


class GridError(ValueError):
    """Raised for malformed grid documents."""


@dataclass
class TrialRecord:
    gen_cell: int
    alg_cell: int
    replicate: int
    p: int
    s: float
    n: str
    seed: int
    algo: str
    ci: str
    lam: str
    alpha: str
    depth: str
    runs: int
    start: str
    status: str
    true_arrows: int
    est_edges: int
    shd: int
    exact: int
    tp: int
    fp: int
    fn: int
    cpdag: str


def _as_list(v):
    return v if isinstance(v, list) else [v]


def _expand(cell: dict, keys: tuple[str, ...]) -> list[dict]:
    base = {k: v for k, v in cell.items() if k not in keys}
    lists = [(k, _as_list(cell[k])) for k in keys if k in cell]
    out = []
    for combo in product(*[vals for _, vals in lists]):
        d = dict(base)
        d.update({k: v for (k, _), v in zip(lists, combo)})
        out.append(d)
    return out


def load_grid(source) -> dict:
    if isinstance(source, dict):
        grid = dict(source)
    else:
        try:
            grid = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise GridError(f"grid is not valid JSON: {exc}") from exc
    if grid.get("schema_version") != SCHEMA_VERSION:
        raise GridError(f"grid schema_version must be {SCHEMA_VERSION}")
    for key in ("generators", "algorithms"):
        if not isinstance(grid.get(key), list) or not grid[key]:
            raise GridError(f"grid needs a non-empty '{key}' list")
    grid.setdefault("master_seed", 0)
    grid.setdefault("replicates", 1)
    grid.setdefault("time_limit", 600)
    return grid


def expand_grid(grid: dict) -> tuple[list[dict], list[dict]]:
    gens = []
    for cell in grid["generators"]:
        for g in _expand(cell, ("p", "s", "n")):
            if "p" not in g or "s" not in g:
                raise GridError("generator cells need 'p' and 's'")
            g.setdefault("n", None)
            gens.append(g)
    algs = []
    for cell in grid["algorithms"]:
        if "algo" not in cell:
            raise GridError("algorithm cells need 'algo'")
        algs.extend(_expand(cell, ("lambda", "alpha", "depth", "runs", "start")))
    return gens, algs


def _seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(x) for x in parts]).generate_state(1)[0])


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_trial(master: int, gi: int, gen: dict, ai: int, alg: dict, rep: int,
              time_limit: float | None) -> tuple[TrialRecord, float]:
    from ..learn import learn

    t0 = time.perf_counter()
    seed = _seed(master, gi, rep)
    rng = np.random.default_rng(seed)
    model = random_gaussian_dag(int(gen["p"]), float(gen["s"]), rng)
    n = gen.get("n")
    stats = sem_covariance_and_sample(model, None if n is None else int(n), rng)
    lam = alg.get("lambda")
    alpha = alg.get("alpha")
    if n is None:
        if alg.get("ci") == "dsep" or lam is None:
            oracle, ci = DSepOracle(model.dag), "dsep"
        else:
            oracle, ci = GaussianOracle(stats, tau=float(lam)), "lambda"
    else:
        oracle, ci = GaussianOracle(stats, alpha=float(alpha if alpha is not None else 0.01)), "alpha"
        alpha = alpha if alpha is not None else 0.01
    depth = alg.get("depth", 4)
    start = alg.get("start", "mindeg" if alg["algo"] == "highdim-sp" else "random")
    runs = int(alg.get("runs", 1))
    cfg = SearchConfig(depth=None if depth in (None, "inf") else int(depth), runs=runs,
                       start=start, seed=_seed(master, gi, rep, ai), time_limit=time_limit)
    status = "ok"
    est_edges = shd_v = exact = tp = fp = fn = 0
    cpdag = ""
    try:
        res = learn(alg["algo"], oracle, stats, cfg)
        if res.trace.termination == "timeout":
            status = "timeout"
        rec = recovery(model.dag, res.cpdag)
        est_edges, shd_v, exact = res.cpdag.n_edges(), rec.shd, int(rec.exact)
        tp, fp, fn = rec.tp, rec.fp, rec.fn
        cpdag = format_pdag_compact(res.cpdag)
    except Exception as exc:  # recorded per trial, never fatal for the grid
        status = f"error:{type(exc).__name__}"
    record = TrialRecord(
        gen_cell=gi, alg_cell=ai, replicate=rep, p=int(gen["p"]), s=float(gen["s"]),
        n="oracle" if n is None else str(int(n)), seed=seed, algo=alg["algo"], ci=ci,
        lam=_fmt(lam), alpha=_fmt(alpha), depth=_fmt(depth), runs=runs, start=str(start),
        status=status, true_arrows=model.dag.n_arrows, est_edges=est_edges, shd=shd_v,
        exact=exact, tp=tp, fp=fp, fn=fn, cpdag=cpdag)
    return record, time.perf_counter() - t0


def _run_job(args):
    return run_trial(*args)


def run_benchmark(grid, out_dir=None, workers: int | None = None) -> list[TrialRecord]:
    """Run every (generator cell, algorithm cell, replicate) of a grid.

    With ``out_dir`` the records are written to ``trials.csv``, aggregates to
    ``aggregates.json`` and wall times to ``timings.csv``.
    """
    grid = load_grid(grid)
    gens, algs = expand_grid(grid)
    master = int(grid["master_seed"])
    limit = grid.get("time_limit")
    jobs = [(master, gi, gen, ai, alg, rep, limit)
            for gi, gen in enumerate(gens)
            for rep in range(int(grid["replicates"]))
            for ai, alg in enumerate(algs)]
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs, chunksize=1))
    else:
        results = [_run_job(j) for j in jobs]
    results.sort(key=lambda r: (r[0].gen_cell, r[0].replicate, r[0].alg_cell))
    records = [r for r, _ in results]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trials.csv").write_text(records_to_csv(records))
        (out / "aggregates.json").write_text(json.dumps(aggregate(records), indent=1, sort_keys=True) + "\n")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gen_cell", "alg_cell", "replicate", "seconds"])
        for r, secs in results:
            w.writerow([r.gen_cell, r.alg_cell, r.replicate, f"{secs:.6f}"])
        (out / "timings.csv").write_text(buf.getvalue())
    return records


def records_to_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    names = [f.name for f in fields(TrialRecord)]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schema_version"] + names)
    for r in records:
        d = asdict(r)
        w.writerow([SCHEMA_VERSION] + [d[k] for k in names])
    return buf.getvalue()


def records_from_csv(text: str) -> list[TrialRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        row.pop("schema_version", None)
        kwargs = {}
        for f in fields(TrialRecord):
            v = row[f.name]
            kwargs[f.name] = int(v) if f.type == "int" else float(v) if f.type == "float" else v
        out.append(TrialRecord(**kwargs))
    return out


def aggregate(records: list[TrialRecord]) -> dict:
    """Per-cell recovery rate, mean SHD and skeleton TP/FP rates (ROC points)."""
    cells: dict[tuple[int, int], list[TrialRecord]] = {}
    for r in records:
        cells.setdefault((r.gen_cell, r.alg_cell), []).append(r)
    out = []
    for (gi, ai), rs in sorted(cells.items()):
        ok = [r for r in rs if r.status in ("ok", "timeout")]
        first = rs[0]
        pairs = first.p * (first.p - 1) // 2
        tp = sum(r.tp for r in ok)
        fn = sum(r.fn for r in ok)
        fp = sum(r.fp for r in ok)
        neg = sum(pairs - r.true_arrows for r in ok)
        out.append({
            "gen_cell": gi, "alg_cell": ai, "p": first.p, "s": first.s, "n": first.n,
            "algo": first.algo, "ci": first.ci, "lambda": first.lam, "alpha": first.alpha,
            "depth": first.depth, "runs": first.runs, "start": first.start,
            "trials": len(rs), "timeouts": sum(r.status == "timeout" for r in rs),
            "errors": sum(r.status.startswith("error") for r in rs),
            "recovery": sum(r.exact for r in ok) / len(ok) if ok else None,
            "mean_shd": sum(r.shd for r in ok) / len(ok) if ok else None,
            "tpr": tp / (tp + fn) if tp + fn else None,
            "fpr": fp / neg if neg else None,
        })
    return {"schema_version": SCHEMA_VERSION, "cells": out}
