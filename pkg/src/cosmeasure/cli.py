"""Command line entry point: ``cosmeasure {generate,solve,bench,profile}``.

Exit status is 0 on success, 1 when any case fails and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench, testset_io
from .errors import CosineMeasureError, EmptyUniverseError
from .generators import GeneratorSpec
from .solvers import METHODS, SolverConfig, solve

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class _UsageError(Exception):
    pass


def _methods(text: str | None) -> tuple[str, ...] | None:
    if text is None:
        return None
    ms = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in ms if m not in METHODS]
    if bad or not ms:
        raise _UsageError(f"--methods must be a comma list drawn from {', '.join(METHODS)}")
    return ms


def _load_plan_specs(path) -> list[GeneratorSpec]:
    """A plan file is either a list of spec objects or ``{"grid": "standard", "dims": [...]}``."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise _UsageError(f"cannot read plan {path}: {exc}") from exc
    try:
        if isinstance(data, dict) and data.get("grid") == "standard":
            dims = data.get("dims", list(testset_io.DESK_DIMS))
            return testset_io.standard_grid(dims, seed=int(data.get("seed", 0)))
        if isinstance(data, list):
            return [testset_io.spec_from_dict(d) for d in data]
    except (TypeError, ValueError) as exc:
        raise _UsageError(f"invalid plan {path}: {exc}") from exc
    raise _UsageError(f"plan {path} must be a list of specs or a standard-grid object")


def cmd_generate(args) -> int:
    out = args.out or args.corpus
    if out is None:
        raise _UsageError("generate needs --out (or --corpus) for the corpus root")
    if args.plan:
        specs = _load_plan_specs(args.plan)
    else:
        dims = [int(d) for d in args.dims.split(",")] if args.dims else list(testset_io.DESK_DIMS)
        specs = testset_io.standard_grid(dims, seed=args.seed)
    manifest = testset_io.build_corpus(specs, out)
    print(f"wrote {len(manifest)} cases to {out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    path = Path(args.case)
    if args.corpus and not path.is_absolute():
        path = Path(args.corpus) / path
    methods = _methods(args.methods) or ("vertex_enum",)
    tc = testset_io.load_case(path)
    failed = False
    for m in methods:
        lp = 200 * tc.set.dim if args.lp_iterations is None else args.lp_iterations
        cfg = SolverConfig(time_budget=args.budget_secs, rng_seed=args.seed, lp_iterations=lp)
        try:
            rep = solve(tc.set, m, cfg)
        except CosineMeasureError as exc:
            print(f"{m}: failed: {exc}")
            failed = True
            continue
        res = rep.result
        print(f"method: {m}")
        print(f"value: {res.value:.17g}")
        print(f"status: {res.status}")
        if tc.known_cm is not None:
            print(f"known: {tc.known_cm:.17g}")
        with np.printoptions(precision=12, suppress=True):
            for u, act in zip(res.cosine_vectors, res.active_sets):
                print(f"vector: {np.array2string(u, separator=', ')} active={list(act)}")
        if res.truncated:
            print("vectors: truncated")
        stats = {k: v for k, v in res.stats.items() if k != "trace"}
        print("stats: " + json.dumps(stats, sort_keys=True, default=str))
    return EXIT_FAILED if failed else EXIT_OK


def cmd_bench(args) -> int:
    if args.plan:
        plan = bench.BenchPlan.from_json(args.plan)
    elif args.corpus:
        plan = bench.BenchPlan(manifest=args.corpus)
    else:
        raise _UsageError("bench needs --corpus or --plan")
    overrides = {}
    if args.corpus and args.plan:
        overrides["manifest"] = args.corpus
    if args.methods:
        overrides["methods"] = _methods(args.methods)
    if args.budget_secs is not None:
        overrides["time_budget"] = args.budget_secs
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.rotations is not None:
        overrides["rotations"] = args.rotations
    if args.lp_iterations is not None:
        overrides["lp_iterations"] = args.lp_iterations
    if args.timing:
        overrides["record_timing"] = True
    plan = replace(plan, **overrides)
    records = bench.run_benchmark(plan)
    text = bench.records_to_csv(records, timing=plan.record_timing)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    failed = [r for r in records if r.failed]
    for r in failed:
        print(f"failed: {r.case_id} {r.method}: {r.error}", file=sys.stderr)
    return EXIT_FAILED if failed else EXIT_OK


def cmd_profile(args) -> int:
    records = bench.read_csv(args.records)
    if args.methods:
        keep = set(_methods(args.methods))
        records = [r for r in records if r.method in keep]
    try:
        prof = bench.accuracy_profile(records)
    except EmptyUniverseError as exc:
        print(f"profile: {exc}", file=sys.stderr)
        prof = None
    if prof is not None:
        thresholds = (0, 2, 4, 6, 8, 10, 12, 14, 16)
        print("method," + ",".join(f"t>={t}" for t in thresholds))
        for m in prof.curves:
            print(m + "," + ",".join(f"{prof.at(m, t):.3f}" for t in thresholds))
        if args.out:
            bench.emit_profile_plot(prof, args.out)
    rows = bench.agreement_table(records)
    if rows:
        print("case_id,methods,max_deviation")
        for row in rows:
            print(f"{row['case_id']},{row['methods']},{row['max_deviation']:.3e}")
    return EXIT_OK if prof is not None or rows else EXIT_FAILED


def _lp_iterations(text: str):
    if text == "budget":
        return text
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer or 'budget'") from None
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer or 'budget'")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cosmeasure", description="Cosine measure solvers and benchmarks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a test corpus and its manifest")
    g.add_argument("--plan", help="JSON plan: list of specs or {\"grid\": \"standard\", \"dims\": [...]}")
    g.add_argument("--dims", help="comma separated dimensions for the default grid (default 2..8)")
    g.add_argument("--corpus", help="corpus root (same as --out)")
    g.add_argument("--out", help="corpus root")
    g.add_argument("--seed", type=int, default=0, help="master seed for randomized families")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="compute the cosine measure of one stored case")
    s.add_argument("case", help="case JSON file (relative to --corpus when given)")
    s.add_argument("--corpus")
    s.add_argument("--methods", help="comma list of methods (default vertex_enum)")
    s.add_argument("--budget-secs", type=float, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--lp-iterations", type=int, default=None)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark sweep and write CSV records")
    b.add_argument("--corpus", help="corpus root or manifest file")
    b.add_argument("--plan", help="JSON file with BenchPlan fields")
    b.add_argument("--methods")
    b.add_argument("--budget-secs", type=float, default=None)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--rotations", type=int, default=None)
    b.add_argument("--lp-iterations", type=_lp_iterations, default=None)
    b.add_argument("--timing", action="store_true", help="fill wall_ms (output is then not reproducible)")
    b.add_argument("--out", help="CSV path (default stdout)")
    b.set_defaults(func=cmd_bench)

    f = sub.add_parser("profile", help="accuracy profile and agreement table from CSV records")
    f.add_argument("records", help="CSV written by bench")
    f.add_argument("--methods")
    f.add_argument("--out", help="SVG path for the profile plot")
    f.set_defaults(func=cmd_profile)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"cosmeasure: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # bad plan fields and similar argument problems
        if isinstance(exc, CosineMeasureError):
            print(f"cosmeasure: failed: {exc}", file=sys.stderr)
            return EXIT_FAILED
        print(f"cosmeasure: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CosineMeasureError, OSError) as exc:
        print(f"cosmeasure: failed: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
