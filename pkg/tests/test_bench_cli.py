import math
import xml.dom.minidom

import numpy as np
import pytest

from cpdf_rrt import cli
from cpdf_rrt.bench import (
    CSV_COLUMNS,
    MissingExperienceError,
    RunRecord,
    path_length_meters,
    records_to_csv,
    run_campaign,
)
from cpdf_rrt.experience import SampleSet
from cpdf_rrt.planner import PlanResult, Tree, load_result
from cpdf_rrt.render import render_tree
from cpdf_rrt.sampling import HistogramDistribution, save_histogram


def _chain(planner, start, input_index, n):
    tree = Tree(start)
    for i in range(n):
        traj = planner.trajectory(tree.states[i], input_index)
        tree.add(traj[-1], i, input_index, traj[-1])
    return tree


def test_path_length(task1):
    p = task1.planner()
    start = np.array([0.5, 0.5, 0.3])
    straight = p.catalog.index(next(u for u in p.catalog if u.v == 0.05 and u.gamma == 0))
    tree = _chain(p, start, straight, 1)
    assert path_length_meters(p, tree, [0]) == 0.0
    assert path_length_meters(p, tree, [0, 1]) == pytest.approx(0.05, abs=1e-9)
    # constant-curvature arc: chord lengths converge to R * swept angle
    turn = 1  # (0.05, -45 deg)
    tree = _chain(p, start, turn, 3)
    assert path_length_meters(p, tree, [0, 1, 2, 3]) == pytest.approx(0.15, abs=1e-6)
    with pytest.raises(ValueError):
        path_length_meters(p, tree, [])


def test_run_record_invariants():
    with pytest.raises(ValueError):
        RunRecord(1, "uniform", 0, True, 10, 0.5)
    with pytest.raises(ValueError):
        RunRecord(1, "uniform", 0, False, 10, 1.5)
    rec = RunRecord(1, "uniform", 3, False, 10, 0.5, wall_ms=12.0)
    assert rec.row() == [1, "u", 3, 0, 10, "0.5", "", "", ""]
    assert rec.row(timing=True)[-1] == "12.0"


def test_empty_campaign(task1):
    summary, records = run_campaign(task1, ["u", "gb"], 0)
    assert records == [] and summary["u"].success_rate == 0.0
    assert records_to_csv(records).strip() == ",".join(CSV_COLUMNS)


def test_missing_histogram_names_collect(task1, tmp_path):
    with pytest.raises(MissingExperienceError, match="cpdf-rrt collect 1"):
        run_campaign(task1, ["c"], 1, experience_dir=tmp_path)
    with pytest.raises(ValueError):
        run_campaign(task1, ["zz"], 1)


@pytest.fixture(scope="module")
def exp_dir(tmp_path_factory, task1):
    d = tmp_path_factory.mktemp("exp")
    rng = np.random.default_rng(0)
    lo, hi = task1.environment.lower_state, task1.environment.upper_state
    X = lo + rng.random((300, 3)) * (hi - lo)
    X[:, 0] = np.clip(X[:, 0], 1.2, 1.8)
    SampleSet(1, lo, hi, 300, list(X)).save(d / "task1_samples.json")
    for mode in ("marginal", "joint"):
        h = HistogramDistribution(mode, 10, lo, hi).fit(X).histogram_
        save_histogram(h, d / f"task1_{mode}.json")
    return d


def test_paired_campaign(task1, exp_dir, monkeypatch):
    from dataclasses import replace

    from cpdf_rrt import bench
    short = replace(task1, max_iterations=300)
    summary, records = run_campaign(short, ["u", "gb", "c", "cstar"], 3, seed=5,
                                    experience_dir=exp_dir)
    assert len(records) == 12
    seeds = [r.seed for r in records]
    assert seeds[0:4] == [seeds[0]] * 4 and len(set(seeds)) == 3
    for kind in ("uniform", "goal_bias", "marginal_custom", "joint_custom"):
        rs = [r for r in records if r.sampler == kind]
        assert summary[kind].success_rate == sum(r.success for r in rs) / 3
        assert summary[kind].tree_density == pytest.approx(np.mean([r.tree_density for r in rs]))
    assert summary.format().startswith("task 1, 3 queries")
    again = run_campaign(short, ["u", "gb", "c", "cstar"], 3, seed=5, experience_dir=exp_dir)[1]
    assert records_to_csv(again) == records_to_csv(records)


def test_render(task1):
    p = task1.planner()
    q = task1.construction_queries[0]
    empty = PlanResult(Tree(q.x_init), 0, False)
    svg = render_tree(empty, task1.environment, q)
    xml.dom.minidom.parseString(svg)
    assert "<line" not in svg and "polyline" not in svg
    assert svg.count("<polygon") == len(task1.environment.obstacles) + 2
    tree = _chain(p, q.x_init, 29, 4)
    res = PlanResult(tree, 4, True, [0, 1, 2, 3, 4], 4)
    svg = render_tree(res, task1.environment, q)
    doc = xml.dom.minidom.parseString(svg)
    poly = [e for e in doc.getElementsByTagName("polyline") if e.getAttribute("id") == "path"][0]
    assert len(poly.getAttribute("points").split()) == len(res.path)
    assert doc.getElementsByTagName("line").length == 4
    assert svg == render_tree(res, task1.environment, q)


def test_cli_plan_render(tmp_path, capsys):
    dump, svg1, svg2 = tmp_path / "t.json", tmp_path / "a.svg", tmp_path / "b.svg"
    rc = cli.main(["plan", "1", "--sampler", "gb", "--seed", "2", "--max-iterations", "200",
                   "--dump", str(dump), "--svg", str(svg1)])
    assert rc == 0
    assert "task 1 sampler gb seed 2" in capsys.readouterr().out
    assert cli.main(["render", str(dump), "--svg", str(svg2)]) == 0
    assert svg1.read_text() == svg2.read_text()
    res, _, _, raw = load_result(dump)
    assert raw["sampler"] == "goal_bias" and len(res.tree) == len(raw["vertices"])


def test_cli_bench_deterministic(tmp_path, exp_dir, monkeypatch):
    from cpdf_rrt import tasks
    real = tasks.builtin_task

    def short(tid):
        t = real(tid)
        from dataclasses import replace
        return replace(t, max_iterations=150)
    monkeypatch.setattr(cli, "builtin_task", short)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bench", "1", "--samplers", "u,c", "--queries", "2", "--seed", "3",
            "--experience-dir", str(exp_dir)]
    assert cli.main(args + ["--csv", str(a)]) == 0
    assert cli.main(args + ["--csv", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 1 + 2 * 2
    assert all(line.endswith(",") for line in lines[1:])  # wall_ms blank without --timing


def test_cli_errors(tmp_path, capsys):
    assert cli.main(["plan", "9"]) != 0
    assert cli.main(["bench", "1", "--samplers", "c", "--queries", "1",
                     "--experience-dir", str(tmp_path)]) != 0
    assert "collect 1" in capsys.readouterr().err
    assert cli.main(["render", str(tmp_path / "missing.json"), "--svg", "x.svg"]) != 0
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])


def test_cli_collect(tmp_path, monkeypatch, task1):
    from dataclasses import replace

    from cpdf_rrt.planner import Query
    q = task1.construction_queries[0]
    quick = replace(task1, construction_queries=(Query(q.x_init, q.x_goal, 0.2, 2000),))
    monkeypatch.setattr(cli, "builtin_task", lambda tid: quick)
    assert cli.main(["collect", "1", "--m", "10", "--max-runs", "5",
                     "--experience-dir", str(tmp_path)]) == 0
    assert {p.name for p in tmp_path.iterdir()} == {
        "task1_samples.json", "task1_marginal.json", "task1_joint.json"}
    assert math.isfinite(len(SampleSet.load(tmp_path / "task1_samples.json")))
