"""Kinodynamic RRT over a discrete control catalog, with sample provenance.

Every vertex after the root remembers the random sample that caused it
to be created. That pairing is what experience collection harvests from
solved queries.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import Environment, in_free_space, poses_free
from .sampling import draw

TREE_FORMAT = "cpdf-tree"
TREE_VERSION = 1


@dataclass(frozen=True)
class Vertex:
    id: int
    state: np.ndarray
    parent: int | None = None
    input_index: int | None = None
    rand_sample: np.ndarray | None = None


class Tree:
    """Growable rooted tree backed by preallocated arrays.

    ``parents[i]`` and ``inputs[i]`` describe the edge into vertex ``i``;
    both are -1 for the root. The random sample behind vertex ``i > 0`` is
    ``rand_samples[i - 1]``.
    """

    def __init__(self, root, capacity=1024):
        root = np.asarray(root, dtype=float)
        self.dim = root.size
        self._states = np.empty((max(capacity, 1), self.dim))
        self._states[0] = root
        self._rand = np.empty((max(capacity, 1), self.dim))
        self.parents = [-1]
        self.inputs = [-1]
        self.size = 1

    def __len__(self):
        return self.size

    @property
    def states(self):
        return self._states[: self.size]

    @property
    def rand_samples(self):
        return self._rand[: self.size - 1]

    def add(self, state, parent, input_index, rand_sample):
        if self.size == self._states.shape[0]:
            self._states = np.concatenate([self._states, np.empty_like(self._states)])
            self._rand = np.concatenate([self._rand, np.empty_like(self._rand)])
        self._states[self.size] = state
        self._rand[self.size - 1] = rand_sample
        self.parents.append(int(parent))
        self.inputs.append(int(input_index))
        self.size += 1
        return self.size - 1

    def vertex(self, i):
        if not 0 <= i < self.size:
            raise IndexError(f"vertex {i} not in tree of size {self.size}")
        if i == 0:
            return Vertex(0, self._states[0].copy())
        return Vertex(i, self._states[i].copy(), self.parents[i], self.inputs[i],
                      self._rand[i - 1].copy())

    @property
    def vertices(self):
        return [self.vertex(i) for i in range(self.size)]

    def path_to(self, i):
        path = [i]
        while self.parents[path[-1]] >= 0:
            path.append(self.parents[path[-1]])
        return path[::-1]


@dataclass(frozen=True)
class Query:
    x_init: np.ndarray
    x_goal: np.ndarray
    goal_tolerance: float
    max_iterations: int = 10_000

    def __post_init__(self):
        object.__setattr__(self, "x_init", np.array(self.x_init, dtype=float))
        object.__setattr__(self, "x_goal", np.array(self.x_goal, dtype=float))
        if self.x_init.shape != self.x_goal.shape:
            raise ValueError("x_init and x_goal must have the same dimension")
        if not self.goal_tolerance > 0:
            raise ValueError("goal tolerance must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")

    def to_dict(self):
        return {
            "x_init": self.x_init.tolist(),
            "x_goal": self.x_goal.tolist(),
            "goal_tolerance": self.goal_tolerance,
            "max_iterations": self.max_iterations,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["x_init"], d["x_goal"], d["goal_tolerance"], d.get("max_iterations", 10_000))


@dataclass
class PlanResult:
    tree: Tree
    iterations_used: int
    success: bool
    path: list | None = None
    goal_vertex: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def x_rand_log(self):
        """Random samples that produced a vertex, in vertex order."""
        return self.tree.rand_samples

    @property
    def x_new_log(self):
        return self.tree.states[1:]

    @property
    def connectivity(self):
        """Fraction of iterations that added a vertex."""
        if self.iterations_used == 0:
            return 0.0
        return (len(self.tree) - 1) / self.iterations_used


class Planner:
    """Bundle of the fixed ingredients of a planning problem.

    Parameters
    ----------
    env : Environment
    model : KinematicCar or DynamicCar
        Carries the edge duration and the integration substep.
    catalog : list
        Discrete control inputs.
    metric : callable
        ``metric(states, state)`` broadcasting over the first argument.
    robot_dims : (length, width)
    """

    def __init__(self, env, model, catalog, metric, robot_dims):
        self.env = env
        self.model = model
        self.catalog = list(catalog)
        self.inputs = model.input_array(self.catalog)
        self.metric = metric
        self.robot_dims = tuple(robot_dims)

    def trajectory(self, state, input_index):
        """Re-simulate one stored edge."""
        return self.model.rollout(np.asarray(state, dtype=float),
                                  self.inputs[input_index : input_index + 1])[0]

    def nearest(self, tree, x_rand):
        return nearest_neighbor(tree, x_rand, self.metric)

    def select_input(self, x_near, x_rand):
        return select_input(x_near, x_rand, self.inputs, self.metric, self.model, self.env,
                            self.robot_dims)

    def plan(self, query, sampler_spec, rng):
        return generate_rrt(query, sampler_spec, self, rng)


def nearest_neighbor(tree, x_rand, metric):
    """Index of the vertex closest to ``x_rand``; ties go to the lowest index."""
    return int(np.argmin(metric(tree.states, x_rand)))


def select_input(x_near, x_rand, inputs, metric, model, env, robot_dims):
    """Best collision-free input from ``x_near`` toward ``x_rand``.

    Every input is integrated for the model's edge duration. Among those
    whose whole trajectory is free, the one whose end state is closest to
    ``x_rand`` wins, ties going to catalog order. Returns
    ``(input_index, trajectory)`` or ``None`` when every input collides.
    """
    trajs = model.rollout(np.asarray(x_near, dtype=float), inputs)
    d = metric(trajs[:, -1], x_rand)
    order = np.argsort(d, kind="stable")
    # a trajectory whose end state collides can never qualify
    order = order[poses_free(trajs[order, -1, :3], env, robot_dims)]
    n_steps = trajs.shape[1]
    start, chunk = 0, 1
    while start < order.size:
        cand = order[start : start + chunk]
        free = poses_free(trajs[cand, :, :3].reshape(-1, 3), env, robot_dims)
        hit = np.flatnonzero(free.reshape(cand.size, n_steps).all(axis=1))
        if hit.size:
            best = int(cand[hit[0]])
            return best, trajs[best]
        start += chunk
        chunk *= 4
    return None


def generate_rrt(query, sampler_spec, planner, rng):
    """Grow a tree from ``query.x_init`` for at most ``query.max_iterations`` iterations.

    An expansion is kept only if its trajectory is collision-free and its
    end state is strictly closer to the random sample than the nearest
    vertex was. Growth stops as soon as a new vertex lands within the goal
    tolerance.
    """
    env, metric = planner.env, planner.metric
    for name, s in (("x_init", query.x_init), ("x_goal", query.x_goal)):
        if s.size != env.dim:
            raise ValueError(f"{name} has dimension {s.size}, environment has {env.dim}")
        if not in_free_space(s, env, planner.robot_dims):
            raise ValueError(f"{name} is not in free space")

    tree = Tree(query.x_init, capacity=min(query.max_iterations + 1, 4096))
    if metric(query.x_init, query.x_goal) < query.goal_tolerance:
        return PlanResult(tree, 0, True, [0], 0)

    for k in range(1, query.max_iterations + 1):
        x_rand = draw(sampler_spec, rng)
        near = nearest_neighbor(tree, x_rand, metric)
        x_near = tree.states[near]
        picked = select_input(x_near, x_rand, planner.inputs, metric, planner.model, env,
                              planner.robot_dims)
        if picked is None:
            continue
        u, traj = picked
        x_new = traj[-1]
        if not metric(x_new, x_rand) < metric(x_near, x_rand):
            continue
        idx = tree.add(x_new, near, u, x_rand)
        if metric(x_new, query.x_goal) < query.goal_tolerance:
            return PlanResult(tree, k, True, tree.path_to(idx), idx)
    return PlanResult(tree, query.max_iterations, False)


def resolve_query(result, query, metric):
    """Root-to-goal vertex list through the earliest vertex within tolerance, or None."""
    d = metric(result.tree.states, query.x_goal)
    hits = np.flatnonzero(np.atleast_1d(d) < query.goal_tolerance)
    if hits.size == 0:
        return None
    return result.tree.path_to(int(hits[0]))


# ---------------------------------------------------------------------------
# tree dumps


def result_to_dict(result, query, env, robot_dims, model, task_id=None, sampler=None):
    tree = result.tree
    return {
        "format": TREE_FORMAT,
        "version": TREE_VERSION,
        "task": task_id,
        "sampler": sampler,
        "model": {"kind": model.kind, "duration": model.duration, "substep": model.substep},
        "robot_dims": list(robot_dims),
        "environment": env.to_dict(),
        "query": query.to_dict(),
        "success": bool(result.success),
        "iterations_used": int(result.iterations_used),
        "path": result.path,
        "vertices": [
            {
                "id": i,
                "parent": None if i == 0 else tree.parents[i],
                "input": None if i == 0 else tree.inputs[i],
                "state": tree.states[i].tolist(),
                "rand_sample": None if i == 0 else tree.rand_samples[i - 1].tolist(),
            }
            for i in range(len(tree))
        ],
    }


def save_result(path, result, query, env, robot_dims, model, **kw):
    with open(path, "w") as f:
        json.dump(result_to_dict(result, query, env, robot_dims, model, **kw), f)
        f.write("\n")


def result_from_dict(d):
    """Rebuild ``(PlanResult, Query, Environment, dump)`` from a tree dump."""
    if d.get("format") != TREE_FORMAT:
        raise ValueError("not a tree dump")
    if d.get("version") != TREE_VERSION:
        raise ValueError(f"unsupported tree dump version {d.get('version')}")
    verts = d["vertices"]
    tree = Tree(verts[0]["state"], capacity=len(verts))
    for v in verts[1:]:
        tree.add(v["state"], v["parent"], v["input"], v["rand_sample"])
    path = d.get("path")
    result = PlanResult(tree, d["iterations_used"], d["success"], path,
                        None if not path else path[-1])
    return result, Query.from_dict(d["query"]), Environment.from_dict(d["environment"]), d


def load_result(path):
    with open(path) as f:
        return result_from_dict(json.load(f))
