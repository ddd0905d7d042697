import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from cpdf_rrt.sampling import (
    DegenerateHistogramError,
    HistogramDistribution,
    JointHistogram,
    MarginalHistogram,
    SamplerSpec,
    StateNormalizer,
    build_joint_histogram,
    build_marginal_histogram,
    denormalize,
    draw,
    histogram_from_dict,
    histogram_to_dict,
    load_histogram,
    normalize,
    rejection_sample,
    rejection_sample_batch,
    save_histogram,
)
from cpdf_rrt.validation import NotFittedError

LO = np.array([0.0, 0.0, -np.pi])
HI = np.array([1.8, 1.125, np.pi])


def test_normalize_examples():
    assert np.array_equal(normalize(LO, LO, HI), np.zeros(3))
    assert np.array_equal(normalize(HI, LO, HI), np.ones(3))
    assert normalize([0.9, 0.0, 0.0], LO, HI)[0] == pytest.approx(0.5)
    assert np.array_equal(normalize(HI + 1e-13, LO, HI), np.ones(3))
    with pytest.raises(ValueError):
        normalize([2.0, 0.0, 0.0], LO, HI)


def test_denormalize_examples():
    assert np.array_equal(denormalize(np.zeros(3), LO, HI), LO)
    assert denormalize([0.5, 0, 0], LO, HI)[0] == pytest.approx(0.9)
    r = np.random.default_rng(0).random((1000, 3))
    assert np.abs(normalize(denormalize(r, LO, HI), LO, HI) - r).max() < 1e-12
    with pytest.raises(ValueError):
        denormalize([1.5, 0, 0], LO, HI)


def test_marginal_histogram_basics():
    same = build_marginal_histogram(np.full((7, 2), 0.33))
    assert np.array_equal(same.masses.max(axis=1), [1.0, 1.0])
    centers = (np.arange(10) + 0.5) / 10
    uni = build_marginal_histogram(centers[:, None])
    assert np.allclose(uni.masses, 0.1)
    edge = build_marginal_histogram(np.array([[1.0]]))
    assert edge.masses[0, -1] == 1.0
    with pytest.raises(ValueError):
        build_marginal_histogram(np.empty((0, 3)))
    with pytest.raises(ValueError):
        MarginalHistogram([[0.5, 0.6]])


def test_joint_histogram_basics():
    one = build_joint_histogram(np.full((5, 3), 0.2))
    assert one.cells == {(2, 2, 2): 1.0}
    two = build_joint_histogram(np.array([[0.01, 0.01], [0.99, 0.99]] * 3))
    assert two.cells == {(0, 0): 0.5, (9, 9): 0.5}
    with pytest.raises(ValueError):
        build_joint_histogram(np.empty((0, 2)))
    with pytest.raises(ValueError):
        JointHistogram(2, 10, {(0, 0): 0.4})


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 400), st.integers(2, 12), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_joint_marginalizes_to_marginal_exactly(n, bins, dims, seed):
    x = np.random.default_rng(seed).random((n, dims)) ** 2
    joint = build_joint_histogram(x, bins)
    marg = build_marginal_histogram(x, bins)
    assert np.array_equal(joint.marginal().masses, marg.masses)
    assert np.array_equal(joint.marginal().counts, marg.counts)


def test_uniform_target_accepts_everything():
    hist = MarginalHistogram(np.full((2, 10), 0.1))
    assert np.array_equal(hist.scaling_constants, [1.0, 1.0])
    _, proposed = rejection_sample_batch(hist, np.random.default_rng(0), 1000, return_stats=True)
    assert list(proposed) == [1000, 1000]


def test_single_bin_target():
    masses = np.zeros((1, 10))
    masses[0, 3] = 1.0
    hist = MarginalHistogram(masses)
    rng = np.random.default_rng(1)
    draws = [rejection_sample(hist, rng)[0] for _ in range(200)]
    assert all(0.3 <= d < 0.4 for d in draws)


def test_degenerate_cap():
    masses = np.zeros((1, 10))
    masses[0, 0] = 1.0
    hist = MarginalHistogram(masses)

    class NeverBin0:
        def random(self, *a):
            return 0.95
    with pytest.raises(DegenerateHistogramError):
        rejection_sample(hist, NeverBin0(), max_proposals=50)


def _skewed(seed, dims=3):
    rng = np.random.default_rng(seed)
    return build_marginal_histogram(rng.beta(2, 5, size=(500, dims)))


@pytest.mark.parametrize("seed", [0, 1])
def test_rejection_fidelity_l1(seed):
    hist = _skewed(seed)
    out = rejection_sample_batch(hist, np.random.default_rng(seed), 100_000)
    for d in range(hist.dims):
        freq = np.bincount(np.minimum((out[:, d] * 10).astype(int), 9), minlength=10) / 1e5
        assert np.abs(freq - hist.masses[d]).sum() <= 0.02


def test_scalar_sampler_matches_target():
    hist = _skewed(3, dims=1)
    rng = np.random.default_rng(3)
    out = np.array([rejection_sample(hist, rng)[0] for _ in range(20_000)])
    freq = np.bincount(np.minimum((out * 10).astype(int), 9), minlength=10) / out.size
    assert np.abs(freq - hist.masses[0]).sum() <= 0.04


def test_acceptance_rate_is_one_over_c():
    hist = _skewed(4, dims=1)
    n = 100_000
    _, proposed = rejection_sample_batch(hist, np.random.default_rng(4), n, return_stats=True)
    rate = n / proposed[0]
    c = hist.scaling_constants[0]
    assert abs(rate - 1 / c) / (1 / c) < 0.02


def test_joint_sampler_marginals_converge():
    rng = np.random.default_rng(5)
    x = rng.random((400, 3))
    x[:, 1] = np.clip(x[:, 0] + 0.05 * rng.standard_normal(400), 0, 1)
    joint = build_joint_histogram(x, 10)
    out = rejection_sample_batch(joint, np.random.default_rng(6), 100_000)
    marg = joint.marginal()
    for d in range(3):
        freq = np.bincount(np.minimum((out[:, d] * 10).astype(int), 9), minlength=10) / 1e5
        assert np.abs(freq - marg.masses[d]).sum() <= 0.02
    # correlation survives joint sampling
    assert np.corrcoef(out[:, 0], out[:, 1])[0, 1] > 0.8


def test_joint_scalar_sampler_in_occupied_cells():
    joint = build_joint_histogram(np.array([[0.05, 0.95], [0.55, 0.15]]), 10)
    rng = np.random.default_rng(0)
    for _ in range(100):
        z = rejection_sample(joint, rng)
        assert tuple(np.minimum((z * 10).astype(int), 9)) in joint.cells


def test_draw_kinds():
    rng = np.random.default_rng(0)
    uni = SamplerSpec("uniform", LO, HI)
    xs = np.array([draw(uni, rng) for _ in range(20_000)])
    assert np.all(xs >= LO) and np.all(xs <= HI)
    assert np.allclose(xs[:, :2].mean(axis=0), (LO + HI)[:2] / 2, rtol=0.02)
    goal = np.array([1.5, 0.3, 0.2])
    gb = SamplerSpec("goal_bias", LO, HI, goal=goal, goal_bias=1.0)
    assert np.array_equal(draw(gb, rng), goal)
    with pytest.raises(ValueError):
        SamplerSpec("goal_bias", LO, HI)
    with pytest.raises(ValueError):
        SamplerSpec("marginal_custom", LO, HI)
    with pytest.raises(ValueError):
        SamplerSpec("nope", LO, HI)


def test_draw_deterministic():
    spec = SamplerSpec("marginal_custom", LO, HI, histogram=_skewed(2))
    a = [draw(spec, np.random.default_rng(9)) for _ in range(3)]
    b = [draw(spec, np.random.default_rng(9)) for _ in range(3)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_uniform_draw_moments_100k():
    rng = np.random.default_rng(11)
    spec = SamplerSpec("uniform", LO, HI)
    xs = np.array([draw(spec, rng) for _ in range(100_000)])
    mid = (LO + HI) / 2
    assert np.allclose(xs[:, :2].mean(axis=0), mid[:2], rtol=0.01)
    assert abs(xs[:, 2].mean()) < 0.01 * np.pi


def test_estimators_follow_sklearn_conventions():
    est = HistogramDistribution("joint", 6, LO, HI)
    assert est.get_params() == {"mode": "joint", "bins": 6, "lower_state": LO, "upper_state": HI}
    assert clone(est).get_params()["bins"] == 6
    with pytest.raises(NotFittedError):
        est.sample(3)
    X = LO + np.random.default_rng(0).random((200, 3)) * (HI - LO)
    out = est.fit(X).sample(50, random_state=1)
    assert out.shape == (50, 3)
    assert np.array_equal(out, est.sample(50, random_state=1))
    assert est.sampler_spec().kind == "joint_custom"
    norm = StateNormalizer(LO, HI).fit()
    assert np.allclose(norm.inverse_transform(norm.fit_transform(X)), X)
    with pytest.raises(ValueError):
        HistogramDistribution("neither", 10, LO, HI).fit(X)


@pytest.mark.parametrize("mode", ["marginal", "joint"])
def test_histogram_persistence(tmp_path, mode):
    X = LO + np.random.default_rng(2).random((60, 3)) * (HI - LO)
    hist = HistogramDistribution(mode, 10, LO, HI).fit(X).histogram_
    path = tmp_path / "h.json"
    save_histogram(hist, path)
    again = load_histogram(path)
    assert histogram_to_dict(again) == histogram_to_dict(hist)
    text = path.read_text()
    save_histogram(again, path)
    assert path.read_text() == text
    bad = json.loads(text)
    bad["version"] = 99
    with pytest.raises(ValueError):
        histogram_from_dict(bad)
