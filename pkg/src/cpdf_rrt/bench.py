"""Paired benchmark campaigns over random queries.

Every sampler kind in a campaign sees the same queries and the same
planner random stream, so differences between kinds come from the
sampling distribution alone.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .sampling import load_histogram
from .tasks import SAMPLER_ALIASES

CSV_COLUMNS = ("task", "sampler", "seed", "success", "tree_density", "connectivity",
               "path_vertices", "path_meters", "wall_ms")
CUSTOM_KINDS = {"marginal_custom": "marginal", "joint_custom": "joint"}
SHORT_NAMES = {"uniform": "u", "goal_bias": "gb", "marginal_custom": "c", "joint_custom": "cstar"}


class MissingExperienceError(FileNotFoundError):
    """A custom sampler was requested but no fitted histogram exists."""


@dataclass(frozen=True)
class RunRecord:
    task: int
    sampler: str
    seed: int
    success: bool
    tree_density: int
    connectivity: float
    path_vertices: int | None = None
    path_meters: float | None = None
    wall_ms: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.connectivity <= 1.0:
            raise ValueError("connectivity must lie in [0, 1]")
        has_path = self.path_vertices is not None and self.path_meters is not None
        if has_path != self.success:
            raise ValueError("path fields must be present exactly when the run succeeded")

    def row(self, timing=False):
        def opt(v):
            return "" if v is None else repr(v)
        return [self.task, SHORT_NAMES.get(self.sampler, self.sampler), self.seed,
                int(self.success), self.tree_density, repr(self.connectivity),
                opt(self.path_vertices), opt(self.path_meters),
                "" if not timing or self.wall_ms is None else f"{self.wall_ms:.1f}"]


@dataclass(frozen=True)
class SamplerSummary:
    sampler: str
    n_queries: int
    success_rate: float
    tree_density: float
    connectivity: float
    path_vertices: float | None
    path_meters: float | None
    wall_ms: float | None


@dataclass(frozen=True)
class CampaignSummary:
    task: int
    n_queries: int
    samplers: tuple

    def __getitem__(self, kind):
        kind = SAMPLER_ALIASES.get(kind, kind)
        for s in self.samplers:
            if s.sampler == kind:
                return s
        raise KeyError(kind)

    def format(self):
        head = f"{'sampler':<8} {'success':>8} {'density':>10} {'connect':>8} {'path_v':>8} {'path_m':>8}"
        lines = [f"task {self.task}, {self.n_queries} queries", head]
        for s in self.samplers:
            pv = "-" if s.path_vertices is None else f"{s.path_vertices:.2f}"
            pm = "-" if s.path_meters is None else f"{s.path_meters:.3f}"
            lines.append(f"{SHORT_NAMES.get(s.sampler, s.sampler):<8} {s.success_rate:>8.3f} "
                         f"{s.tree_density:>10.1f} {s.connectivity:>8.4f} {pv:>8} {pm:>8}")
        return "\n".join(lines)


def path_length_meters(planner, tree, path):
    """Arc length of a root-to-vertex path, summed over integration substeps."""
    if not path:
        raise ValueError("path must be non-empty")
    total = 0.0
    for v in path[1:]:
        traj = planner.trajectory(tree.states[tree.parents[v]], tree.inputs[v])
        total += float(np.hypot(*np.diff(traj[:, :2], axis=0).T).sum())
    return total


def default_experience_dir():
    return Path(str(resources.files("cpdf_rrt") / "data" / "experience"))


def samples_path(directory, task_id):
    return Path(directory) / f"task{task_id}_samples.json"


def histogram_path(directory, task_id, mode):
    return Path(directory) / f"task{task_id}_{mode}.json"


def load_custom_histogram(task, kind, directory=None):
    mode = CUSTOM_KINDS[SAMPLER_ALIASES.get(kind, kind)]
    path = histogram_path(directory or default_experience_dir(), task.id, mode)
    if not path.exists():
        raise MissingExperienceError(
            f"no {mode} histogram for task {task.id} at {path}; "
            f"run `cpdf-rrt collect {task.id}` first"
        )
    return load_histogram(path)


def campaign_queries(task, n_queries, seed):
    rng = np.random.default_rng(np.random.SeedSequence([seed, task.id]))
    return [task.random_query(rng) for _ in range(n_queries)]


def run_seed(seed, query_index):
    """Planner seed for one query, shared by every sampler kind."""
    return int(np.random.SeedSequence([seed, query_index]).generate_state(1)[0])


def run_one(task, planner, spec, query, seed, sampler):
    t0 = time.perf_counter()
    result = planner.plan(query, spec, np.random.default_rng(seed))
    wall = (time.perf_counter() - t0) * 1e3
    ok = bool(result.success)
    return RunRecord(
        task.id, sampler, seed, ok, len(result.tree), result.connectivity,
        len(result.path) if ok else None,
        path_length_meters(planner, result.tree, result.path) if ok else None,
        wall,
    ), result


def summarize(task, records, kinds, n_queries):
    out = []
    for kind in kinds:
        rs = [r for r in records if r.sampler == kind]
        won = [r for r in rs if r.success]

        def mean(vals):
            return float(np.mean(vals)) if vals else None
        out.append(SamplerSummary(
            kind, len(rs),
            len(won) / len(rs) if rs else 0.0,
            mean([r.tree_density for r in rs]) or 0.0,
            mean([r.connectivity for r in rs]) or 0.0,
            mean([r.path_vertices for r in won]),
            mean([r.path_meters for r in won]),
            mean([r.wall_ms for r in rs]),
        ))
    return CampaignSummary(task.id, n_queries, tuple(out))


def run_campaign(task, kinds, n_queries, seed=0, experience_dir=None, histograms=None,
                 progress=None):
    """Run every sampler kind on the same ``n_queries`` random queries.

    ``histograms`` maps a custom kind to an already loaded histogram and
    bypasses the experience directory. Returns ``(summary, records)``.
    """
    kinds = [SAMPLER_ALIASES.get(k, k) for k in kinds]
    unknown = [k for k in kinds if k not in SHORT_NAMES]
    if unknown:
        raise ValueError(f"unknown sampler kind(s): {', '.join(unknown)}")
    if n_queries < 0:
        raise ValueError("n_queries must be non-negative")
    histograms = dict(histograms or {})
    specs = {}
    for kind in kinds:
        hist = None
        if kind in CUSTOM_KINDS:
            hist = histograms.get(kind) or load_custom_histogram(task, kind, experience_dir)
        specs[kind] = task.sampler_spec(kind, hist)
    planner = task.planner()
    queries = campaign_queries(task, n_queries, seed)
    records = []
    for qi, query in enumerate(queries):
        s = run_seed(seed, qi)
        for kind in kinds:
            rec, _ = run_one(task, planner, specs[kind], query, s, kind)
            records.append(rec)
            if progress:
                progress(qi, rec)
    return summarize(task, records, kinds, n_queries), records


def records_to_csv(records, timing=False):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.row(timing))
    return buf.getvalue()
