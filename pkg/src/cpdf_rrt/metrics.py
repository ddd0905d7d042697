"""State-similarity functions for nearest-neighbor search, input choice and goal tests.

All functions broadcast over leading axes, so a single query state can be
compared against a whole array of tree vertices at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KinematicMetricWeights:
    w1: float = 0.8
    w2: float = 0.2

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0 or abs(self.w1 + self.w2 - 1.0) > 1e-9:
            raise ValueError("kinematic weights must be non-negative and sum to 1")


@dataclass(frozen=True)
class DynamicMetricWeights:
    k1: float = 1.0
    k2: float = 1.0
    k3: float = 1.0
    k4: float = 1.0
    # The published position term only uses x; this switch adds |y2 - y1|.
    include_y: bool = False

    def __post_init__(self):
        ks = (self.k1, self.k2, self.k3, self.k4)
        if min(ks) < 0 or max(ks) == 0:
            raise ValueError("dynamic weights must be non-negative and not all zero")


def angular_distance(theta1, theta2):
    """Shortest absolute angle between two headings, in [0, pi]."""
    d = np.abs(np.asarray(theta1, dtype=float) - np.asarray(theta2, dtype=float))
    d = np.mod(d, 2.0 * np.pi)
    return np.minimum(d, 2.0 * np.pi - d)


def rho_position(s1, s2, env):
    """Planar distance divided by the diagonal of the position bounds."""
    s1, s2 = np.asarray(s1, dtype=float), np.asarray(s2, dtype=float)
    d = np.hypot(s2[..., 0] - s1[..., 0], s2[..., 1] - s1[..., 1])
    return d / env.diagonal


def rho_orientation(theta1, theta2):
    return angular_distance(theta1, theta2) / np.pi


def rho_kinematic(s1, s2, weights, env):
    s1, s2 = np.asarray(s1, dtype=float), np.asarray(s2, dtype=float)
    return weights.w1 * rho_position(s1, s2, env) + weights.w2 * rho_orientation(
        s1[..., 2], s2[..., 2]
    )


def rho_dynamic(s1, s2, weights):
    """Weighted L1-style distance over pose and body velocities (not normalized)."""
    s1, s2 = np.asarray(s1, dtype=float), np.asarray(s2, dtype=float)
    pos = np.abs(s2[..., 0] - s1[..., 0])
    if weights.include_y:
        pos = pos + np.abs(s2[..., 1] - s1[..., 1])
    rho_k = weights.k1 * pos + weights.k2 * angular_distance(s1[..., 2], s2[..., 2])
    rho_d = weights.k3 * (
        np.abs(s1[..., 3] - s2[..., 3]) + np.abs(s1[..., 4] - s2[..., 4])
    ) + weights.k4 * np.abs(s1[..., 5] - s2[..., 5])
    return rho_d + rho_k


class Metric:
    """A metric bound to its weights (and bounds, for the kinematic case).

    Calling it returns an array for array inputs and a float for scalar pairs.
    """

    def __init__(self, weights, env=None):
        if isinstance(weights, KinematicMetricWeights) and env is None:
            raise ValueError("the kinematic metric needs the environment bounds")
        self.weights = weights
        self.env = env

    def __call__(self, s1, s2):
        if isinstance(self.weights, KinematicMetricWeights):
            out = rho_kinematic(s1, s2, self.weights, self.env)
        else:
            out = rho_dynamic(s1, s2, self.weights)
        return float(out) if np.ndim(out) == 0 else out
