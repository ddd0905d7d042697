import json
import math
import shutil

import numpy as np
import pytest

from cpdf_rrt.geometry import in_free_space
from cpdf_rrt.metrics import DynamicMetricWeights, KinematicMetricWeights
from cpdf_rrt.tasks import CONFIG_ENV_VAR, builtin_task, config_dir, task_from_dict


@pytest.mark.parametrize("tid", [1, 2, 3])
def test_small_room_bounds(tid):
    t = builtin_task(tid)
    assert t.model_kind == "kinematic"
    assert np.allclose(t.environment.upper_state, [1.8, 1.125, math.pi])
    assert np.allclose(t.environment.lower_state, [0.0, 0.0, -math.pi])


def test_task_specific_settings():
    assert builtin_task(1).weights == KinematicMetricWeights(0.8, 0.2)
    assert builtin_task(2).weights == KinematicMetricWeights(0.9, 0.1)
    assert builtin_task(3).weights == KinematicMetricWeights(0.9, 0.1)
    t4 = builtin_task(4)
    assert t4.weights == KinematicMetricWeights(0.8, 0.2)
    assert len(t4.construction_queries) == 10
    t5 = builtin_task(5)
    assert t5.model_kind == "dynamic"
    assert np.allclose(t5.environment.upper_state, [1.2, 5.0, math.pi, 0.5, 0.5, 0.5])
    assert isinstance(t5.weights, DynamicMetricWeights)
    assert t5.bins["joint"] == 6


@pytest.mark.parametrize("tid", [1, 2, 3, 4, 5])
def test_construction_queries_are_free(tid):
    t = builtin_task(tid)
    for q in t.construction_queries:
        assert in_free_space(q.x_init, t.environment, t.robot_dims)
        assert in_free_space(q.x_goal, t.environment, t.robot_dims)
        assert np.array_equal(q.x_goal, t.goal)


def test_unknown_task():
    with pytest.raises(ValueError):
        builtin_task(6)
    with pytest.raises(ValueError):
        builtin_task("x")


def test_uniform_random_queries(task1):
    rng = np.random.default_rng(0)
    for _ in range(200):
        q = task1.random_query(rng)
        assert in_free_space(q.x_init, task1.environment, task1.robot_dims)
        assert np.array_equal(q.x_goal, task1.goal)
        assert q.max_iterations == 10_000


def test_gaussian_query_spread(task5):
    rng = np.random.default_rng(0)
    xs = np.array([task5.random_query(rng).x_init for _ in range(10_000)])
    base = task5.construction_queries[0].x_init
    sigma = np.array(task5.evaluation["sigma"])
    spread = xs.std(axis=0)
    for d in range(6):
        if sigma[d] > 0:
            assert abs(spread[d] - sigma[d]) <= 0.1 * sigma[d]
        else:
            assert np.all(xs[:, d] == base[d])


def test_config_dir_override(tmp_path, monkeypatch):
    for f in config_dir().glob("task*.json"):
        shutil.copy(f, tmp_path / f.name)
    d = json.loads((tmp_path / "task1.json").read_text())
    d["goal_tolerance"] = 0.123
    (tmp_path / "task1.json").write_text(json.dumps(d))
    monkeypatch.setenv(CONFIG_ENV_VAR, str(tmp_path))
    assert builtin_task(1).goal_tolerance == 0.123


def test_rejects_colliding_construction_query():
    d = json.loads((config_dir() / "task1.json").read_text())
    d["construction_queries"][0]["x_init"] = [0.9, 0.35, 0.0]
    with pytest.raises(ValueError):
        task_from_dict(d)
    d["model"] = "hover"
    with pytest.raises(ValueError):
        task_from_dict(d)
