"""Sampling distributions over the planner's state space.

Four sources of random states are provided:

* ``uniform``: independent uniform draw per dimension over the bounds
* ``goal_bias``: the exact goal state with probability ``goal_bias``, otherwise uniform
* ``marginal_custom``: learned per-dimension histograms, each sampled on its own
* ``joint_custom``: a learned joint histogram over all dimensions

Learned histograms live on the normalized unit hypercube and are sampled
with discrete rejection sampling against a uniform proposal.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .geometry import wrap_angle
from .validation import check_bounds, check_generator, check_is_fitted, check_states

FORMAT_NAME = "cpdf-histogram"
FORMAT_VERSION = 1
BOUNDARY_CLAMP = 1e-12
MAX_PROPOSALS = 10_000
# Dense lookup tables are used for joint histograms up to this many cells.
_DENSE_LIMIT = 10_000_000

KINDS = ("uniform", "goal_bias", "marginal_custom", "joint_custom")


class DegenerateHistogramError(RuntimeError):
    """Rejection sampling hit its proposal cap without accepting."""


def normalize(state, lower, upper):
    """Affine map of raw states onto [0, 1] per dimension.

    Values within 1e-12 outside the unit interval are clamped; anything
    further out is an error.
    """
    lower, upper = check_bounds(lower, upper)
    state = np.asarray(state, dtype=float)
    r = (state - lower) / (upper - lower)
    if np.any(r < -BOUNDARY_CLAMP) or np.any(r > 1 + BOUNDARY_CLAMP):
        raise ValueError("state lies outside the normalization bounds")
    return np.clip(r, 0.0, 1.0)


def denormalize(r, lower, upper):
    lower, upper = check_bounds(lower, upper)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > 1):
        raise ValueError("normalized components must lie in [0, 1]")
    return lower + r * (upper - lower)


def bin_index(values, bins):
    """Equal-width bin of values in [0, 1]; 1.0 falls in the last bin."""
    idx = np.floor(np.asarray(values, dtype=float) * bins).astype(int)
    return np.clip(idx, 0, bins - 1)


@dataclass(frozen=True)
class MarginalHistogram:
    """Independent per-dimension bin masses (the custom distribution without correlation)."""

    masses: np.ndarray
    counts: np.ndarray | None = None
    lower_state: np.ndarray | None = None
    upper_state: np.ndarray | None = None

    def __post_init__(self):
        masses = np.array(self.masses, dtype=float)
        if masses.ndim != 2 or masses.shape[1] < 1:
            raise ValueError("masses must have shape (n_dims, n_bins)")
        if np.any(masses < 0) or np.any(np.abs(masses.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("each dimension's masses must be non-negative and sum to 1")
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)
        _freeze_optional(self, "counts", int)
        _freeze_optional(self, "lower_state", float)
        _freeze_optional(self, "upper_state", float)

    kind = "marginal"

    @property
    def dims(self):
        return self.masses.shape[0]

    @property
    def bins(self):
        return self.masses.shape[1]

    @property
    def scaling_constants(self):
        """Per-dimension envelope constant c = max mass / uniform mass."""
        return self.masses.max(axis=1) * self.bins


@dataclass(frozen=True)
class JointHistogram:
    """Sparse joint bin masses over all dimensions (the correlated custom distribution)."""

    dims: int
    bins: int
    cells: dict
    counts: dict | None = None
    lower_state: np.ndarray | None = None
    upper_state: np.ndarray | None = None
    _dense: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    kind = "joint"

    def __post_init__(self):
        cells = {tuple(int(i) for i in k): float(v) for k, v in self.cells.items() if v != 0}
        if not cells:
            raise ValueError("joint histogram has no mass")
        for k, v in cells.items():
            if len(k) != self.dims or min(k) < 0 or max(k) >= self.bins:
                raise ValueError(f"cell index {k} out of range")
            if v < 0:
                raise ValueError("cell masses must be non-negative")
        if abs(math.fsum(cells.values()) - 1.0) > 1e-9:
            raise ValueError("joint masses must sum to 1")
        object.__setattr__(self, "cells", dict(sorted(cells.items())))
        if self.counts is not None:
            object.__setattr__(
                self, "counts", dict(sorted((tuple(k), int(v)) for k, v in self.counts.items()))
            )
        _freeze_optional(self, "lower_state", float)
        _freeze_optional(self, "upper_state", float)
        if self.bins ** self.dims <= _DENSE_LIMIT:
            dense = np.zeros((self.bins,) * self.dims)
            for k, v in self.cells.items():
                dense[k] = v
            dense = dense.ravel()
            dense.setflags(write=False)
            object.__setattr__(self, "_dense", dense)

    @property
    def max_mass(self):
        return max(self.cells.values())

    @property
    def scaling_constant(self):
        return self.max_mass * self.bins ** self.dims

    def mass_of(self, flat_index):
        """Masses of flattened cell indices (vectorized)."""
        if self._dense is not None:
            return self._dense[flat_index]
        idx = np.unravel_index(np.asarray(flat_index), (self.bins,) * self.dims)
        keys = zip(*(np.atleast_1d(i) for i in idx))
        vals = np.array([self.cells.get(tuple(int(j) for j in k), 0.0) for k in keys])
        return vals.reshape(np.shape(flat_index))

    def marginal(self):
        """Sum out all-but-one dimension; exact when counts are available."""
        if self.counts is not None:
            counts = np.zeros((self.dims, self.bins), dtype=np.int64)
            for k, v in self.counts.items():
                for d, i in enumerate(k):
                    counts[d, i] += v
            n = counts[0].sum()
            return MarginalHistogram(counts / n, counts, self.lower_state, self.upper_state)
        masses = np.zeros((self.dims, self.bins))
        for k, v in self.cells.items():
            for d, i in enumerate(k):
                masses[d, i] += v
        return MarginalHistogram(masses / masses.sum(axis=1, keepdims=True),
                                 None, self.lower_state, self.upper_state)


def _freeze_optional(obj, name, dtype):
    value = getattr(obj, name)
    if value is not None:
        value = np.array(value, dtype=dtype)
        value.setflags(write=False)
        object.__setattr__(obj, name, value)


def build_marginal_histogram(samples, bins=10, lower_state=None, upper_state=None):
    """Per-dimension equal-width histogram of normalized samples."""
    samples = check_states(samples, name="samples")
    if samples.shape[0] == 0:
        raise ValueError("cannot build a histogram from an empty sample set")
    if np.any(samples < 0) or np.any(samples > 1):
        raise ValueError("samples must be normalized into [0, 1]")
    idx = bin_index(samples, bins)
    counts = np.stack([np.bincount(idx[:, d], minlength=bins) for d in range(samples.shape[1])])
    return MarginalHistogram(counts / samples.shape[0], counts, lower_state, upper_state)


def build_joint_histogram(samples, bins_per_dim=10, lower_state=None, upper_state=None):
    """Sparse joint histogram of normalized samples."""
    samples = check_states(samples, name="samples")
    if samples.shape[0] == 0:
        raise ValueError("cannot build a histogram from an empty sample set")
    if np.any(samples < 0) or np.any(samples > 1):
        raise ValueError("samples must be normalized into [0, 1]")
    idx = bin_index(samples, bins_per_dim)
    keys, counts = np.unique(idx, axis=0, return_counts=True)
    n = samples.shape[0]
    count_map = {tuple(int(i) for i in k): int(c) for k, c in zip(keys, counts)}
    cells = {k: c / n for k, c in count_map.items()}
    return JointHistogram(samples.shape[1], bins_per_dim, cells, count_map,
                          lower_state, upper_state)


def _proposal_cap(c, max_proposals):
    # Keep the chance of a spurious cap hit on a valid table below exp(-20).
    return max(max_proposals, int(math.ceil(20.0 * c)))


def _reject_1d(masses, rng, max_proposals):
    bins = masses.shape[0]
    top = masses.max()
    cap = _proposal_cap(top * bins, max_proposals)
    for _ in range(cap):
        z0 = rng.random()
        u0 = rng.random()
        if u0 * top < masses[min(int(z0 * bins), bins - 1)]:
            return z0
    raise DegenerateHistogramError(f"no sample accepted after {cap} proposals")


def _reject_joint(hist, rng, max_proposals):
    c = hist.scaling_constant
    cap = _proposal_cap(c, max_proposals)
    top = hist.max_mass
    block = int(min(4096, max(1, math.ceil(c))))
    shape = (hist.bins,) * hist.dims
    used = 0
    while used < cap:
        z0 = rng.random((block, hist.dims))
        u0 = rng.random(block)
        flat = np.ravel_multi_index(tuple(bin_index(z0, hist.bins).T), shape)
        ok = np.flatnonzero(u0 * top < hist.mass_of(flat))
        if ok.size:
            return z0[ok[0]]
        used += block
    raise DegenerateHistogramError(f"no sample accepted after {used} proposals")


def rejection_sample(hist, rng, max_proposals=MAX_PROPOSALS):
    """One normalized draw from a learned histogram.

    A point z0 is proposed uniformly on the unit interval (or cube) and
    kept with probability mass(bin(z0)) / max_mass, i.e. p / (c q) with a
    uniform proposal q. The accepted point is uniform inside its bin.
    Marginal histograms are sampled one dimension at a time.
    """
    if isinstance(hist, MarginalHistogram):
        return np.array([_reject_1d(m, rng, max_proposals) for m in hist.masses])
    return _reject_joint(hist, rng, max_proposals)


def rejection_sample_batch(hist, rng, n_samples, return_stats=False):
    """Many normalized draws at once; same acceptance rule as :func:`rejection_sample`."""
    if isinstance(hist, MarginalHistogram):
        out = np.empty((n_samples, hist.dims))
        proposed = np.zeros(hist.dims, dtype=np.int64)
        for d, masses in enumerate(hist.masses):
            out[:, d], proposed[d] = _batch_1d(
                lambda z: masses[bin_index(z[:, 0], hist.bins)], masses.max(),
                hist.bins, 1, rng, n_samples)
        stats = proposed
    else:
        shape = (hist.bins,) * hist.dims

        def lookup(z):
            return hist.mass_of(np.ravel_multi_index(tuple(bin_index(z, hist.bins).T), shape))

        out, stats = _batch_1d(lookup, hist.max_mass, hist.bins ** hist.dims, hist.dims,
                               rng, n_samples)
    return (out, stats) if return_stats else out


def _batch_1d(lookup, top, n_cells, dims, rng, n_samples):
    c = top * n_cells
    accepted = []
    have = 0
    proposed = 0
    while have < n_samples:
        k = max(64, int(math.ceil((n_samples - have) * c * 1.1)))
        z0 = rng.random((k, dims))
        u0 = rng.random(k)
        hits = np.flatnonzero(u0 * top < lookup(z0))
        need = n_samples - have
        if hits.size >= need:
            # count proposals only up to the last acceptance actually used
            hits = hits[:need]
            proposed += int(hits[-1]) + 1
        else:
            proposed += k
        accepted.append(z0[hits])
        have += hits.size
    out = np.concatenate(accepted)
    return (out[:, 0] if dims == 1 else out), proposed


# ---------------------------------------------------------------------------
# sampler specs


@dataclass(frozen=True)
class SamplerSpec:
    kind: str
    lower_state: np.ndarray
    upper_state: np.ndarray
    histogram: object = None
    goal: np.ndarray | None = None
    goal_bias: float = 0.1
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}; expected one of {KINDS}")
        lo, hi = check_bounds(self.lower_state, self.upper_state)
        object.__setattr__(self, "lower_state", lo)
        object.__setattr__(self, "upper_state", hi)
        if self.kind == "goal_bias":
            if self.goal is None:
                raise ValueError("goal_bias sampling needs a goal state")
            if not 0.0 <= self.goal_bias <= 1.0:
                raise ValueError("goal_bias probability must be in [0, 1]")
            object.__setattr__(self, "goal", np.array(self.goal, dtype=float))
        if self.kind == "marginal_custom" and not isinstance(self.histogram, MarginalHistogram):
            raise ValueError("marginal_custom sampling needs a MarginalHistogram")
        if self.kind == "joint_custom" and not isinstance(self.histogram, JointHistogram):
            raise ValueError("joint_custom sampling needs a JointHistogram")
        if self.histogram is not None and self.histogram.dims != lo.size:
            raise ValueError("histogram dimension does not match the state bounds")


def draw(spec, rng):
    """One raw random state according to ``spec``."""
    lo, hi = spec.lower_state, spec.upper_state
    if spec.kind == "goal_bias":
        if rng.random() < spec.goal_bias:
            return spec.goal.copy()
        r = rng.random(lo.size)
    elif spec.kind == "uniform":
        r = rng.random(lo.size)
    else:
        r = rejection_sample(spec.histogram, rng)
    state = lo + r * (hi - lo)
    if state.size >= 3:
        state[2] = wrap_angle(state[2])
    return state


# ---------------------------------------------------------------------------
# estimator-style front ends


class StateNormalizer(TransformerMixin, BaseEstimator):
    """Maps raw states onto the unit hypercube given the state-space box."""

    def __init__(self, lower_state=None, upper_state=None):
        self.lower_state = lower_state
        self.upper_state = upper_state

    def fit(self, X=None, y=None):
        self.lower_, self.upper_ = check_bounds(self.lower_state, self.upper_state)
        if X is not None:
            check_states(X, self.lower_.size)
        return self

    def transform(self, X):
        check_is_fitted(self, "lower_")
        return normalize(check_states(X, self.lower_.size), self.lower_, self.upper_)

    def inverse_transform(self, X):
        check_is_fitted(self, "lower_")
        return denormalize(check_states(X, self.lower_.size), self.lower_, self.upper_)


class HistogramDistribution(BaseEstimator):
    """Learned sampling distribution fitted to raw experience states.

    Parameters
    ----------
    mode : {"marginal", "joint"}
        Independent per-dimension histograms or one joint table.
    bins : int
        Bins per dimension.
    lower_state, upper_state : array-like
        State-space box used for normalization.

    Attributes
    ----------
    histogram_ : MarginalHistogram or JointHistogram
    """

    def __init__(self, mode="marginal", bins=10, lower_state=None, upper_state=None):
        self.mode = mode
        self.bins = bins
        self.lower_state = lower_state
        self.upper_state = upper_state

    def fit(self, X, y=None):
        lo, hi = check_bounds(self.lower_state, self.upper_state)
        X = check_states(X, lo.size)
        if X.shape[0] == 0:
            raise ValueError("cannot fit a distribution to an empty sample set")
        r = normalize(X, lo, hi)
        if self.mode == "marginal":
            self.histogram_ = build_marginal_histogram(r, self.bins, lo, hi)
        elif self.mode == "joint":
            self.histogram_ = build_joint_histogram(r, self.bins, lo, hi)
        else:
            raise ValueError(f"mode must be 'marginal' or 'joint', got {self.mode!r}")
        return self

    def sampler_spec(self, seed=None):
        check_is_fitted(self, "histogram_")
        kind = "marginal_custom" if self.mode == "marginal" else "joint_custom"
        return SamplerSpec(kind, self.histogram_.lower_state, self.histogram_.upper_state,
                           histogram=self.histogram_, seed=seed)

    def sample(self, n_samples=1, random_state=None):
        """Draw ``n_samples`` raw states, shape (n_samples, n_dims)."""
        check_is_fitted(self, "histogram_")
        rng = check_generator(random_state)
        r = rejection_sample_batch(self.histogram_, rng, n_samples)
        return denormalize(r, self.histogram_.lower_state, self.histogram_.upper_state)

    @classmethod
    def from_histogram(cls, hist):
        est = cls(hist.kind, hist.bins, hist.lower_state, hist.upper_state)
        est.histogram_ = hist
        return est


# ---------------------------------------------------------------------------
# persistence


def histogram_to_dict(hist):
    d = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": hist.kind,
        "dims": int(hist.dims),
        "bins": int(hist.bins),
        "lower_state": None if hist.lower_state is None else hist.lower_state.tolist(),
        "upper_state": None if hist.upper_state is None else hist.upper_state.tolist(),
    }
    if isinstance(hist, MarginalHistogram):
        d["masses"] = hist.masses.tolist()
        d["counts"] = None if hist.counts is None else hist.counts.tolist()
    else:
        d["cells"] = [[list(k), v] for k, v in hist.cells.items()]
        d["counts"] = (None if hist.counts is None
                       else [[list(k), v] for k, v in hist.counts.items()])
    return d


def histogram_from_dict(d):
    if d.get("format") != FORMAT_NAME:
        raise ValueError("not a histogram file")
    if d.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported histogram version {d.get('version')}")
    if d["kind"] == "marginal":
        counts = d.get("counts")
        if counts is not None:
            counts = np.array(counts, dtype=np.int64)
            masses = counts / counts.sum(axis=1, keepdims=True)
        else:
            masses = d["masses"]
        return MarginalHistogram(masses, counts, d["lower_state"], d["upper_state"])
    if d["kind"] == "joint":
        counts = d.get("counts")
        if counts is not None:
            count_map = {tuple(k): int(v) for k, v in counts}
            n = sum(count_map.values())
            cells = {k: v / n for k, v in count_map.items()}
        else:
            count_map = None
            cells = {tuple(k): v for k, v in d["cells"]}
        return JointHistogram(d["dims"], d["bins"], cells, count_map,
                              d["lower_state"], d["upper_state"])
    raise ValueError(f"unknown histogram kind {d['kind']!r}")


def save_histogram(hist, path):
    with open(path, "w") as f:
        json.dump(histogram_to_dict(hist), f, indent=1)
        f.write("\n")


def load_histogram(path):
    with open(path) as f:
        return histogram_from_dict(json.load(f))
