"""Planar world model: poses, oriented rectangles, and collision checks.

Obstacles and the robot body are both oriented rectangles, so every
collision query reduces to a separating-axis test. Touching rectangles
(zero-area contact) are treated as free.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Overlaps below this depth (meters) count as contact, not collision.
CONTACT_TOL = 1e-9


def wrap_angle(theta):
    """Map angles into (-pi, pi]. Values already in range are returned untouched."""
    theta = np.asarray(theta, dtype=float)
    wrapped = -(np.mod(np.pi - theta, 2.0 * np.pi) - np.pi)
    out = np.where((theta > -np.pi) & (theta <= np.pi), theta, wrapped)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self):
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class OrientedRect:
    """Rectangle of ``length`` along its heading and ``width`` across it."""

    center: Pose
    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError(
                f"rectangle dimensions must be positive, got {self.length} x {self.width}"
            )

    def corners(self):
        """Corners as a (4, 2) array, counter-clockwise starting front-left."""
        c, s = np.cos(self.center.theta), np.sin(self.center.theta)
        hl, hw = self.length / 2.0, self.width / 2.0
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.center.x, self.center.y])

    def to_dict(self):
        return {
            "x": self.center.x,
            "y": self.center.y,
            "theta": self.center.theta,
            "length": self.length,
            "width": self.width,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(Pose(d["x"], d["y"], d.get("theta", 0.0)), d["length"], d["width"])


@dataclass(frozen=True)
class Environment:
    """State-space box [lower_state, upper_state] plus rectangular obstacles.

    The first two state dimensions are the planar position; obstacle
    checks only use those.
    """

    lower_state: np.ndarray
    upper_state: np.ndarray
    obstacles: tuple = ()
    _obs: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lo = np.array(self.lower_state, dtype=float)
        hi = np.array(self.upper_state, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size < 2:
            raise ValueError("lower_state and upper_state must be 1-D of equal length >= 2")
        if not np.all(lo < hi):
            raise ValueError("lower_state must be strictly below upper_state")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower_state", lo)
        object.__setattr__(self, "upper_state", hi)
        obstacles = tuple(self.obstacles)
        object.__setattr__(self, "obstacles", obstacles)
        for rect in obstacles:
            corners = rect.corners()
            if (
                np.any(corners < lo[:2] - CONTACT_TOL)
                or np.any(corners > hi[:2] + CONTACT_TOL)
            ):
                raise ValueError(f"obstacle {rect} extends outside the position bounds")
        object.__setattr__(self, "_obs", _pack_rects(obstacles))

    @property
    def dim(self):
        return self.lower_state.size

    @property
    def diagonal(self):
        """Length of the diagonal of the position bounds."""
        span = self.upper_state[:2] - self.lower_state[:2]
        return float(np.hypot(span[0], span[1]))

    def to_dict(self):
        return {
            "lower_state": self.lower_state.tolist(),
            "upper_state": self.upper_state.tolist(),
            "obstacles": [o.to_dict() for o in self.obstacles],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["lower_state"],
            d["upper_state"],
            tuple(OrientedRect.from_dict(o) for o in d.get("obstacles", ())),
        )


def _pack_rects(rects):
    n = len(rects)
    out = {
        "center": np.empty((n, 2)),
        "cos": np.empty(n),
        "sin": np.empty(n),
        "hl": np.empty(n),
        "hw": np.empty(n),
    }
    for i, r in enumerate(rects):
        out["center"][i] = (r.center.x, r.center.y)
        out["cos"][i] = np.cos(r.center.theta)
        out["sin"][i] = np.sin(r.center.theta)
        out["hl"][i] = r.length / 2.0
        out["hw"][i] = r.width / 2.0
    return out


def robot_footprint(pose, length, width):
    """Body rectangle of a robot whose geometric center sits at ``pose``."""
    if not isinstance(pose, Pose):
        pose = Pose(*np.asarray(pose, dtype=float)[:3])
    return OrientedRect(pose, length, width)


def _sat_overlap(c1, cos1, sin1, hl1, hw1, c2, cos2, sin2, hl2, hw2):
    """Vectorized separating-axis test; arguments broadcast against each other.

    Returns True where the rectangles overlap with positive area.
    """
    dx = c2[..., 0] - c1[..., 0]
    dy = c2[..., 1] - c1[..., 1]
    # relative orientation terms: |u1.u2| = |v1.v2| = |cos|, |u1.v2| = |v1.u2| = |sin|
    cd = np.abs(cos1 * cos2 + sin1 * sin2)
    sd = np.abs(sin2 * cos1 - cos2 * sin1)
    sep = np.zeros(np.broadcast(dx, cd, hl1, hl2).shape, dtype=bool)
    # axes of rectangle 1
    sep |= np.abs(dx * cos1 + dy * sin1) >= hl1 + hl2 * cd + hw2 * sd - CONTACT_TOL
    sep |= np.abs(-dx * sin1 + dy * cos1) >= hw1 + hl2 * sd + hw2 * cd - CONTACT_TOL
    # axes of rectangle 2
    sep |= np.abs(dx * cos2 + dy * sin2) >= hl2 + hl1 * cd + hw1 * sd - CONTACT_TOL
    sep |= np.abs(-dx * sin2 + dy * cos2) >= hw2 + hl1 * sd + hw1 * cd - CONTACT_TOL
    return ~sep


def rects_overlap(a, b):
    """True iff two oriented rectangles intersect with positive area."""
    return bool(
        _sat_overlap(
            np.array([a.center.x, a.center.y]),
            np.cos(a.center.theta), np.sin(a.center.theta), a.length / 2, a.width / 2,
            np.array([b.center.x, b.center.y]),
            np.cos(b.center.theta), np.sin(b.center.theta), b.length / 2, b.width / 2,
        )
    )


def poses_free(poses, env, robot_dims):
    """Vectorized free-space test for an (N, >=3) array of poses.

    Returns a boolean array of length N.
    """
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    length, width = robot_dims
    hl, hw = length / 2.0, width / 2.0
    c, s = np.cos(poses[:, 2]), np.sin(poses[:, 2])
    ext_x = hl * np.abs(c) + hw * np.abs(s)
    ext_y = hl * np.abs(s) + hw * np.abs(c)
    lo, hi = env.lower_state, env.upper_state
    free = (
        (poses[:, 0] - ext_x >= lo[0] - CONTACT_TOL)
        & (poses[:, 0] + ext_x <= hi[0] + CONTACT_TOL)
        & (poses[:, 1] - ext_y >= lo[1] - CONTACT_TOL)
        & (poses[:, 1] + ext_y <= hi[1] + CONTACT_TOL)
    )
    obs = env._obs
    if len(env.obstacles) == 0 or not free.any():
        return free
    hit = _sat_overlap(
        poses[:, None, :2], c[:, None], s[:, None], hl, hw,
        obs["center"][None, :, :], obs["cos"][None, :], obs["sin"][None, :],
        obs["hl"][None, :], obs["hw"][None, :],
    )
    return free & ~hit.any(axis=1)


def in_free_space(state, env, robot_dims):
    """True iff the robot body at ``state`` lies inside the bounds and touches no obstacle."""
    state = np.asarray(state, dtype=float)
    return bool(poses_free(state[None, :3], env, robot_dims)[0])


def edge_in_free_space(states, env, robot_dims):
    """True iff every state of an integrated edge is collision-free."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.shape[0] == 0:
        raise ValueError("edge must contain at least one state")
    return bool(poses_free(states[:, :3], env, robot_dims).all())
