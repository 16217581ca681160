"""Command-line interface: simulate, learn, bench, polytope and check."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .ci import CiOracle, CiSet, DSepOracle, GaussianOracle, GaussianSuffStats, NumericalError, check_graphoid
from .errors import GuardError, InvariantError
from .formats import (FormatError, format_dag, format_pdag, format_perm, parse_ci_statements,
                      parse_dag, parse_perm, read_matrix_csv, write_matrix_csv)
from .graph import GraphError

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_GUARD = 4
EXIT_FAILS = 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _depth(text: str):
    if text in ("inf", "none", "unbounded"):
        return None
    return _positive_int(text)


def build_parser() -> argparse.ArgumentParser:
    from .learn import ALGORITHMS

    parser = _Parser(prog="greedysp", description="Permutation-based causal structure learning.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="draw a random linear Gaussian DAG model")
    sim.add_argument("--nodes", type=_positive_int, required=True)
    sim.add_argument("--density", type=float, required=True, help="expected neighbourhood size s")
    sim.add_argument("--samples", type=_positive_int)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)

    lrn = sub.add_parser("learn", help="learn an essential graph from a CI source")
    lrn.add_argument("--algo", choices=ALGORITHMS, required=True)
    lrn.add_argument("--ci", required=True,
                     help="oracle:DAG | relations:CI | gauss:SIGMA.csv | samples:DATA.csv")
    lrn.add_argument("--nodes", type=_positive_int, help="node count for relations: sources")
    lrn.add_argument("--n", type=_positive_int, help="sample size behind a gauss: covariance")
    grp = lrn.add_mutually_exclusive_group()
    grp.add_argument("--lambda", dest="lam", type=float)
    grp.add_argument("--alpha", type=float)
    lrn.add_argument("--depth", type=_depth, default=None)
    lrn.add_argument("--runs", type=_positive_int, default=1)
    lrn.add_argument("--start", default="random", help="order | random | mindeg | PERM")
    lrn.add_argument("--seed", type=int, default=0)
    lrn.add_argument("--time-limit", type=float)
    lrn.add_argument("--out", required=True)

    bench = sub.add_parser("bench", help="run a benchmark grid")
    bench.add_argument("--grid", required=True)
    bench.add_argument("--out", required=True)

    poly = sub.add_parser("polytope", help="build a quotient of the permutohedron")
    poly.add_argument("--kind", choices=("assoc", "even", "even-assoc"), required=True)
    poly.add_argument("--relations")
    poly.add_argument("--nodes", type=_positive_int, required=True)
    poly.add_argument("--out", required=True)

    chk = sub.add_parser("check", help="decide an identifiability assumption exhaustively")
    chk.add_argument("--assumption", choices=("tsp", "esp", "smr", "graphoid"), required=True)
    chk.add_argument("--relations", required=True)
    chk.add_argument("--nodes", type=_positive_int, required=True)
    return parser


def _relations(path: str, nodes: int | None) -> CiSet:
    statements = parse_ci_statements(path)
    seen = max((max(i, j, *s) for i, j, s in statements), default=0)
    p = nodes if nodes is not None else seen
    if p < 1:
        raise FormatError("cannot infer the node count; pass --nodes")
    if seen > p:
        raise FormatError(f"statement mentions node {seen} but --nodes is {p}")
    return CiSet(p, statements)


def load_ci_source(spec: str, *, nodes=None, lam=None, alpha=None, n=None):
    """Parse a ``kind:path`` CI source into (oracle, gaussian stats or None)."""
    kind, sep, path = spec.partition(":")
    if not sep or not path:
        raise UsageError(f"--ci expects KIND:PATH, got {spec!r}")
    if kind == "oracle":
        return DSepOracle(parse_dag(path, nodes)), None
    if kind == "relations":
        return _relations(path, nodes), None
    if kind == "gauss":
        cov = read_matrix_csv(path)
        stats = GaussianSuffStats(cov, n)
        if alpha is not None and n is None:
            raise UsageError("--alpha with a gauss: source needs --n")
        if lam is None and alpha is None:
            raise UsageError("gauss: sources need --lambda or --alpha")
        return GaussianOracle(stats, tau=lam, alpha=alpha), stats
    if kind == "samples":
        stats = GaussianSuffStats.from_samples(read_matrix_csv(path))
        if lam is None and alpha is None:
            raise UsageError("samples: sources need --alpha (or --lambda)")
        return GaussianOracle(stats, tau=lam, alpha=alpha), stats
    raise UsageError(f"unknown CI source kind {kind!r}")


def _cmd_simulate(args) -> int:
    from .simbench.sem import random_gaussian_dag, sample

    if not 0 < args.density <= max(args.nodes - 1, 0):
        raise UsageError("--density must lie in (0, nodes - 1]")
    rng = np.random.default_rng(args.seed)
    model = random_gaussian_dag(args.nodes, args.density, rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "dag.txt").write_text(format_dag(model.dag))
    write_matrix_csv(out / "weights.csv", model.weights)
    write_matrix_csv(out / "sigma.csv", model.covariance())
    if args.samples:
        write_matrix_csv(out / "samples.csv", sample(model, args.samples, rng))
    return EXIT_OK


def _cmd_learn(args) -> int:
    from .learn import learn
    from .search import SearchConfig

    oracle, stats = load_ci_source(args.ci, nodes=args.nodes, lam=args.lam, alpha=args.alpha,
                                   n=args.n)
    start = args.start
    if start not in ("order", "random", "mindeg"):
        try:
            start = parse_perm(start, oracle.p)
        except (FormatError, ValueError) as exc:
            raise UsageError(f"--start: {exc}") from exc
    cfg = SearchConfig(depth=args.depth, runs=args.runs, start=start, seed=args.seed,
                       time_limit=args.time_limit)
    res = learn(args.algo, oracle, stats, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "cpdag.txt").write_text(format_pdag(res.cpdag))
    (out / "dag.txt").write_text(format_dag(res.dag) if res.dag is not None else "")
    (out / "trace.jsonl").write_text(res.trace.to_jsonl())
    return EXIT_OK


def _cmd_bench(args) -> int:
    from .simbench.bench import GridError, run_benchmark

    try:
        run_benchmark(args.grid, args.out)
    except GridError as exc:
        raise FormatError(str(exc)) from exc
    return EXIT_OK


def _cmd_polytope(args) -> int:
    from .polytope import dag_associahedron_graph, even_associahedron_graph, even_permutohedron_graph

    if args.kind == "even":
        g = even_permutohedron_graph(args.nodes)
    else:
        if not args.relations:
            raise UsageError(f"--kind {args.kind} needs --relations")
        c = _relations(args.relations, args.nodes)
        build = dag_associahedron_graph if args.kind == "assoc" else even_associahedron_graph
        g = build(c, args.nodes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "graph.json").write_text(g.to_json())
    (out / "graph.dot").write_text(g.to_dot())
    print(f"{g.n_vertices} vertices, {g.n_edges} edges")
    return EXIT_OK


def _cmd_check(args) -> int:
    from .search import check_assumption

    c = _relations(args.relations, args.nodes)
    if args.assumption == "graphoid":
        rep = check_graphoid(c)
        print(f"semigraphoid: {rep.semigraphoid}")
        print(f"graphoid: {rep.graphoid}")
        print(f"intersection: {rep.intersection}")
        for axiom, found in rep.counterexamples.items():
            for item in found:
                if axiom == "sg1":
                    print(f"counterexample sg1: {item} not symmetric")
                    continue
                premises, missing = item
                print(f"counterexample {axiom}: {' and '.join(map(str, premises))}"
                      f" but not {', '.join(map(str, missing))}")
        return EXIT_OK if rep.graphoid else EXIT_FAILS
    rep = check_assumption(c, args.nodes, args.assumption.upper())
    print(f"assumption: {rep.which}")
    print(f"holds: {rep.holds}")
    print(f"sparsest arrow count: {rep.min_arrows}")
    print(f"sparsest equivalence classes: {rep.n_sparsest_mecs}")
    if rep.witness is not None:
        print(f"witness start: {format_perm(rep.witness)}")
        print(f"failing starts ({len(rep.failing_starts)}): "
              + " ".join(format_perm(s) for s in rep.failing_starts))
    return EXIT_OK if rep.holds else EXIT_FAILS


COMMANDS = {
    "simulate": _cmd_simulate,
    "learn": _cmd_learn,
    "bench": _cmd_bench,
    "polytope": _cmd_polytope,
    "check": _cmd_check,
}


def run_cli(argv: list[str] | None = None) -> int:
    """Run one command and return its exit code; diagnostics go to stderr."""
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.verb](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, GraphError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except GuardError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (InvariantError, NumericalError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
