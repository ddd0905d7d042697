"""Benchmark task definitions loaded from JSON config files.

Five tasks ship with the package (``data/tasks/task{1..5}.json``). Set
``CPDF_RRT_CONFIG_DIR`` to point :func:`builtin_task` at another
directory with the same file names. Obstacle and goal coordinates in the
shipped files are hand-measured approximations of the published figures.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .geometry import Environment, in_free_space
from .metrics import DynamicMetricWeights, KinematicMetricWeights, Metric
from .models import VehicleParams, input_catalog_dynamic, input_catalog_kinematic, make_model
from .planner import Planner, Query
from .sampling import SamplerSpec

CONFIG_ENV_VAR = "CPDF_RRT_CONFIG_DIR"
QUERY_TRIES = 1000

# short names accepted on the command line
SAMPLER_ALIASES = {
    "u": "uniform",
    "uniform": "uniform",
    "gb": "goal_bias",
    "goal_bias": "goal_bias",
    "c": "marginal_custom",
    "marginal_custom": "marginal_custom",
    "cstar": "joint_custom",
    "joint_custom": "joint_custom",
}


class QueryGenerationError(RuntimeError):
    pass


def config_dir():
    override = os.environ.get(CONFIG_ENV_VAR)
    if override:
        return Path(override)
    return Path(str(resources.files("cpdf_rrt") / "data" / "tasks"))


@dataclass(frozen=True)
class TaskDefinition:
    id: int
    name: str
    model_kind: str
    environment: Environment
    vehicle: VehicleParams
    catalog: tuple
    weights: object
    edge_duration: float
    substep: float
    goal_tolerance: float
    max_iterations: int
    construction_queries: tuple
    evaluation: dict
    collection: dict
    bins: dict
    goal_bias: float = 0.1
    raw: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        expected = 3 if self.model_kind == "kinematic" else 6
        if self.environment.dim != expected:
            raise ValueError(f"{self.model_kind} tasks need {expected}-D bounds")
        for q in self.construction_queries:
            for s in (q.x_init, q.x_goal):
                if not in_free_space(s, self.environment, self.vehicle.dims):
                    raise ValueError(f"task {self.id}: construction query state {s} collides")

    @property
    def goal(self):
        return self.construction_queries[0].x_goal

    @property
    def robot_dims(self):
        return self.vehicle.dims

    def model(self):
        return make_model(self.model_kind, self.vehicle, self.edge_duration, self.substep)

    def metric(self):
        return Metric(self.weights, self.environment)

    def planner(self):
        return Planner(self.environment, self.model(), self.catalog, self.metric(),
                       self.robot_dims)

    def sampler_spec(self, kind, histogram=None, goal=None):
        kind = SAMPLER_ALIASES.get(kind, kind)
        env = self.environment
        return SamplerSpec(
            kind, env.lower_state, env.upper_state, histogram=histogram,
            goal=self.goal if goal is None else goal, goal_bias=self.goal_bias,
        )

    def random_query(self, rng):
        """Fixed goal, random collision-free start.

        Tasks using ``uniform`` evaluation draw the start uniformly over the
        state box; ``gaussian`` evaluation perturbs the construction start.
        """
        env = self.environment
        lo, hi = env.lower_state, env.upper_state
        mode = self.evaluation.get("mode", "uniform")
        base = self.construction_queries[0]
        if mode == "gaussian":
            sigma = np.asarray(self.evaluation["sigma"], dtype=float)
        for _ in range(QUERY_TRIES):
            if mode == "uniform":
                x = lo + rng.random(lo.size) * (hi - lo)
            elif mode == "gaussian":
                x = base.x_init + sigma * rng.standard_normal(lo.size)
                if np.any(x < lo) or np.any(x > hi):
                    continue
            else:
                raise ValueError(f"unknown evaluation mode {mode!r}")
            if in_free_space(x, env, self.robot_dims):
                return Query(x, base.x_goal, self.goal_tolerance, self.max_iterations)
        raise QueryGenerationError(
            f"task {self.id}: no collision-free start found in {QUERY_TRIES} tries"
        )


def task_from_dict(d):
    kind = d["model"]
    vehicle = VehicleParams(**d.get("vehicle", {}))
    env = Environment.from_dict(d)
    cat = d.get("catalog", {})
    if kind == "kinematic":
        catalog = input_catalog_kinematic(tuple(cat.get("speeds", (0.05, 0.01, -0.01))))
        weights = KinematicMetricWeights(**d["metric"])
    elif kind == "dynamic":
        catalog = input_catalog_dynamic(
            tuple(cat.get("forces", (0.005, 0.001, -0.001))), cat.get("c_y", -1e-3)
        )
        weights = DynamicMetricWeights(**d.get("metric", {}))
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    tol = d["goal_tolerance"]
    k = d.get("max_iterations", 10_000)
    queries = tuple(
        Query(q["x_init"], q["x_goal"], tol, k) for q in d["construction_queries"]
    )
    default_duration = 1.0 if kind == "kinematic" else 0.5
    return TaskDefinition(
        id=int(d["id"]),
        name=d.get("name", f"task {d['id']}"),
        model_kind=kind,
        environment=env,
        vehicle=vehicle,
        catalog=tuple(catalog),
        weights=weights,
        edge_duration=d.get("edge_duration", default_duration),
        substep=d.get("substep", 0.01),
        goal_tolerance=tol,
        max_iterations=k,
        construction_queries=queries,
        evaluation=d.get("evaluation", {"mode": "uniform"}),
        collection=d.get("collection", {}),
        bins=d.get("bins", {"marginal": 10, "joint": 10}),
        goal_bias=d.get("goal_bias", 0.1),
        raw=d,
    )


def load_task(path):
    with open(path) as f:
        return task_from_dict(json.load(f))


def builtin_task(task_id):
    """Frozen definition of one of the five benchmark tasks."""
    try:
        task_id = int(task_id)
    except (TypeError, ValueError):
        raise ValueError(f"unknown task {task_id!r}") from None
    if task_id not in range(1, 6):
        raise ValueError(f"unknown task {task_id!r}; builtin tasks are 1-5")
    return load_task(config_dir() / f"task{task_id}.json")
