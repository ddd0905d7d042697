"""Harvesting experience from solved construction queries.

A construction query is solved repeatedly. Each time it succeeds, the
random samples that produced the solution-path vertices are kept; failed
runs are discarded. The accumulated samples are then fitted with a
histogram distribution.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .planner import resolve_query
from .sampling import HistogramDistribution

logger = logging.getLogger(__name__)

SAMPLES_FORMAT = "cpdf-samples"
SAMPLES_VERSION = 1
DEFAULT_MAX_RUNS = 200


class EmptyCollectionError(RuntimeError):
    """No construction run succeeded, so nothing was collected."""


@dataclass(frozen=True)
class RunProvenance:
    run: int
    query: int
    seed: int
    success: bool
    iterations: int
    tree_size: int
    contributed: int


@dataclass
class SampleSet:
    task_id: int
    lower_state: np.ndarray
    upper_state: np.ndarray
    target_m: int | None = None
    samples: list = field(default_factory=list)
    runs: list = field(default_factory=list)

    def __len__(self):
        return len(self.samples)

    def as_array(self):
        if not self.samples:
            return np.empty((0, len(self.lower_state)))
        return np.array(self.samples, dtype=float)

    @property
    def success_rate(self):
        if not self.runs:
            return 0.0
        return sum(r.success for r in self.runs) / len(self.runs)

    def to_dict(self):
        return {
            "format": SAMPLES_FORMAT,
            "version": SAMPLES_VERSION,
            "task": self.task_id,
            "lower_state": list(map(float, self.lower_state)),
            "upper_state": list(map(float, self.upper_state)),
            "target_m": self.target_m,
            "runs": [r.__dict__ for r in self.runs],
            "samples": [list(map(float, s)) for s in self.samples],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != SAMPLES_FORMAT:
            raise ValueError("not a sample-set file")
        if d.get("version") != SAMPLES_VERSION:
            raise ValueError(f"unsupported sample-set version {d.get('version')}")
        return cls(
            d["task"],
            np.array(d["lower_state"], dtype=float),
            np.array(d["upper_state"], dtype=float),
            d.get("target_m"),
            [np.array(s, dtype=float) for s in d["samples"]],
            [RunProvenance(**r) for r in d.get("runs", [])],
        )

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


def get_pair(result, vertex_id):
    """The random sample that created ``vertex_id``; ``None`` for the root."""
    if vertex_id == 0:
        return None
    if not 0 < vertex_id < len(result.tree):
        raise IndexError(f"vertex {vertex_id} is not in the tree")
    return result.x_rand_log[vertex_id - 1].copy()


def path_samples(result, path):
    out = []
    for v in path:
        s = get_pair(result, v)
        if s is not None:
            out.append(s)
    return out


def collect(task, target_m=None, max_runs=DEFAULT_MAX_RUNS, base_seed=0,
            sampler="uniform", histogram=None, planner=None):
    """Accumulate path-generating samples from repeated construction queries.

    Run ``i`` solves construction query ``i mod n_queries`` with seed
    ``base_seed + i``. Collection stops once ``target_m`` samples are held
    or after ``max_runs`` runs.
    """
    if target_m is None:
        target_m = task.collection.get("target_m")
    if target_m is not None and target_m <= 0:
        raise ValueError("target_m must be positive")
    if max_runs <= 0:
        raise ValueError("max_runs must be positive")
    planner = planner or task.planner()
    spec = task.sampler_spec(sampler, histogram)
    env = task.environment
    out = SampleSet(task.id, env.lower_state.copy(), env.upper_state.copy(), target_m)
    queries = task.construction_queries
    for i in range(max_runs):
        qi = i % len(queries)
        query = queries[qi]
        seed = base_seed + i
        result = planner.plan(query, spec, np.random.default_rng(seed))
        path = resolve_query(result, query, planner.metric)
        got = path_samples(result, path) if path is not None else []
        out.samples.extend(got)
        out.runs.append(RunProvenance(i, qi, seed, path is not None, result.iterations_used,
                                      len(result.tree), len(got)))
        logger.info("task %s run %d: success=%s samples=%d total=%d",
                    task.id, i, path is not None, len(got), len(out))
        if target_m is not None and len(out) >= target_m:
            break
    if not any(r.success for r in out.runs):
        raise EmptyCollectionError(
            f"task {task.id}: none of {len(out.runs)} construction runs reached the goal "
            f"(seeds {base_seed}..{base_seed + len(out.runs) - 1}); "
            "raise max_runs or the iteration limit"
        )
    return out


def fit(sample_set, mode="marginal", bins=10):
    """Fit a marginal or joint histogram distribution to collected samples."""
    if len(sample_set) == 0:
        raise ValueError("cannot fit an empty sample set")
    est = HistogramDistribution(mode, bins, sample_set.lower_state, sample_set.upper_state)
    return est.fit(sample_set.as_array()).histogram_
