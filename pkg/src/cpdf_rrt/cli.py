"""``cpdf-rrt`` command line: collect, plan, bench, render."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (
    CUSTOM_KINDS,
    default_experience_dir,
    histogram_path,
    load_custom_histogram,
    path_length_meters,
    records_to_csv,
    run_campaign,
    samples_path,
)
from .experience import DEFAULT_MAX_RUNS, collect, fit
from .planner import load_result, save_result
from .render import save_svg
from .sampling import save_histogram
from .tasks import SAMPLER_ALIASES, builtin_task

log = logging.getLogger("cpdf_rrt")


def _cmd_collect(args):
    task = builtin_task(args.task)
    out_dir = Path(args.experience_dir or default_experience_dir())
    out_dir.mkdir(parents=True, exist_ok=True)
    samples = collect(task, target_m=args.m, max_runs=args.max_runs, base_seed=args.seed)
    samples.save(samples_path(out_dir, task.id))
    for mode in ("marginal", "joint"):
        save_histogram(fit(samples, mode, task.bins[mode]),
                       histogram_path(out_dir, task.id, mode))
    won = sum(r.success for r in samples.runs)
    print(f"task {task.id}: {len(samples)} samples from {won}/{len(samples.runs)} "
          f"successful runs -> {out_dir}")
    return 0


def _cmd_plan(args):
    task = builtin_task(args.task)
    kind = SAMPLER_ALIASES.get(args.sampler, args.sampler)
    hist = load_custom_histogram(task, kind, args.experience_dir) if kind in CUSTOM_KINDS else None
    rng = np.random.default_rng(args.seed)
    if args.random_query:
        query = task.random_query(rng)
    else:
        query = task.construction_queries[args.query_index]
    if args.max_iterations is not None:
        query = type(query)(query.x_init, query.x_goal, query.goal_tolerance, args.max_iterations)
    planner = task.planner()
    result = planner.plan(query, task.sampler_spec(kind, hist), rng)
    line = (f"task {task.id} sampler {args.sampler} seed {args.seed}: "
            f"success={result.success} vertices={len(result.tree)} "
            f"iterations={result.iterations_used} connectivity={result.connectivity:.4f}")
    if result.success:
        line += (f" path_vertices={len(result.path)} "
                 f"path_meters={path_length_meters(planner, result.tree, result.path):.3f}")
    print(line)
    if args.dump:
        save_result(args.dump, result, query, task.environment, task.robot_dims, planner.model,
                    task_id=task.id, sampler=kind)
    if args.svg:
        save_svg(args.svg, result, task.environment, query)
    return 0


def _cmd_bench(args):
    task = builtin_task(args.task)
    kinds = [k.strip() for k in args.samplers.split(",") if k.strip()]

    def progress(qi, rec):
        log.info("query %d %s success=%s vertices=%d", qi, rec.sampler, rec.success,
                 rec.tree_density)
    summary, records = run_campaign(task, kinds, args.queries, args.seed,
                                    args.experience_dir, progress=progress)
    text = records_to_csv(records, timing=args.timing)
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    print(summary.format(), file=sys.stderr if not args.csv else sys.stdout)
    return 0


def _cmd_render(args):
    result, query, env, _ = load_result(args.dump)
    save_svg(args.svg, result, env, query)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="cpdf-rrt", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("collect", help="harvest experience from construction queries")
    c.add_argument("task", type=int)
    c.add_argument("--m", type=int, default=None, help="target sample count (task default)")
    c.add_argument("--seed", type=int, default=0, help="seed of run 0; run i uses seed+i")
    c.add_argument("--max-runs", type=int, default=DEFAULT_MAX_RUNS)
    c.add_argument("--experience-dir", default=None)
    c.set_defaults(func=_cmd_collect)

    pl = sub.add_parser("plan", help="solve one query")
    pl.add_argument("task", type=int)
    pl.add_argument("--sampler", default="u", choices=sorted(SAMPLER_ALIASES))
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--random-query", action="store_true",
                    help="draw a random start instead of the construction query")
    pl.add_argument("--query-index", type=int, default=0)
    pl.add_argument("--max-iterations", type=int, default=None)
    pl.add_argument("--experience-dir", default=None)
    pl.add_argument("--svg", default=None)
    pl.add_argument("--dump", default=None, help="write the tree as JSON")
    pl.set_defaults(func=_cmd_plan)

    b = sub.add_parser("bench", help="paired campaign over random queries")
    b.add_argument("task", type=int)
    b.add_argument("--samplers", default="u,gb,c")
    b.add_argument("--queries", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--csv", default=None, help="output file (stdout if omitted)")
    b.add_argument("--experience-dir", default=None)
    b.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    b.set_defaults(func=_cmd_bench)

    r = sub.add_parser("render", help="draw a tree dump as SVG")
    r.add_argument("dump")
    r.add_argument("--svg", required=True)
    r.set_defaults(func=_cmd_render)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, IndexError, OSError, RuntimeError) as exc:
        print(f"cpdf-rrt: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
