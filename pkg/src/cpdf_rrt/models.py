"""Car-like vehicle models, fixed-step RK4 integration and control catalogs.

States are plain numpy arrays:

* kinematic: ``[x, y, theta]``
* dynamic: ``[x, y, theta, vx, vy, r]`` with body-frame velocities

Controls are discrete. Catalog entries are named tuples; the models
consume them stacked into a 2-D float array, one row per input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import wrap_angle

STEERING_DEG = tuple(range(-45, 50, 5))
VX_EPSILON = 1e-3


class DegenerateSpeedError(ValueError):
    """Slip angles are undefined when the longitudinal speed is (near) zero."""


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the 1:10 test car."""

    wheelbase: float = 0.255
    mass: float = 0.2891
    inertia_z: float = 4.7e-3
    a_rear: float = 0.14
    b_front: float = 0.115
    body_length: float = 0.39
    body_width: float = 0.195

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if abs(self.a_rear + self.b_front - self.wheelbase) > 1e-3:
            raise ValueError("a_rear + b_front must equal the wheelbase within 1 mm")

    @property
    def dims(self):
        return (self.body_length, self.body_width)


class KinematicInput(NamedTuple):
    v: float
    gamma: float


class DynamicInput(NamedTuple):
    f_fx: float
    f_rx: float
    gamma: float
    c_y: float


def input_catalog_kinematic(speeds=(0.05, 0.01, -0.01), steering_deg=STEERING_DEG):
    """Stop followed by one block of steering angles per speed.

    Order is stop, high, low, reverse; inside a block the steering runs
    from -45 to 45 degrees.
    """
    catalog = [KinematicInput(0.0, 0.0)]
    for v in speeds:
        catalog.extend(KinematicInput(v, math.radians(g)) for g in steering_deg)
    return catalog


def input_catalog_dynamic(forces=(0.005, 0.001, -0.001), c_y=-1e-3, steering_deg=STEERING_DEG):
    """Same layout as the kinematic catalog with equal front/rear traction."""
    catalog = [DynamicInput(0.0, 0.0, 0.0, c_y)]
    for f in forces:
        catalog.extend(DynamicInput(f, f, math.radians(g), c_y) for g in steering_deg)
    return catalog


def ste_kinematic(state, u, params):
    """Time derivative of the kinematic car state."""
    _, _, theta = state[:3]
    v, gamma = u
    if abs(gamma) >= math.pi / 2:
        raise ValueError("steering angle must satisfy |gamma| < pi/2")
    return np.array([
        v * math.cos(theta),
        v * math.sin(theta),
        v * math.tan(gamma) / params.wheelbase,
    ])


def slip_angles(state, gamma, params, vx_epsilon=VX_EPSILON):
    """Front and rear tire slip angles of the bicycle model."""
    vx, vy, r = state[3], state[4], state[5]
    if abs(vx) <= vx_epsilon:
        raise DegenerateSpeedError(f"|vx| = {abs(vx)} <= {vx_epsilon}")
    alpha_f = (vy + r * params.b_front) / vx - gamma
    alpha_r = (vy - params.a_rear * r) / vx
    return alpha_f, alpha_r


def ste_dynamic(state, u, params, vx_epsilon=VX_EPSILON):
    """Time derivative of the dynamic bicycle-model state.

    Below ``vx_epsilon`` the slip angles, and with them the lateral tire
    forces, are taken as zero.
    """
    u = np.asarray(u, dtype=float)
    return _dynamic_rhs(np.asarray(state, dtype=float)[None, :], u[None, :], params, vx_epsilon)[0]


def _kinematic_rhs(states, inputs, params):
    theta = states[..., 2]
    v = inputs[..., 0]
    return np.stack(
        [v * np.cos(theta), v * np.sin(theta), v * np.tan(inputs[..., 1]) / params.wheelbase],
        axis=-1,
    )


def _dynamic_terms(inputs, params, vx_epsilon):
    """Input-only quantities reused by every derivative evaluation."""
    f_fx, f_rx, gamma, c_y = (np.ascontiguousarray(inputs[:, i]) for i in range(4))
    cg, sg = np.cos(gamma), np.sin(gamma)
    return {
        "gamma": gamma, "c_y": c_y, "f_rx": f_rx, "cg": cg, "sg": sg,
        "fx_c": f_fx * cg, "fx_s": f_fx * sg, "params": params, "eps": vx_epsilon,
    }


def _dynamic_derivs(theta, vx, vy, r, t):
    p = t["params"]
    a, b = p.a_rear, p.b_front
    moving = np.abs(vx) > t["eps"]
    inv_vx = np.divide(1.0, vx, out=np.zeros_like(vx), where=moving)
    alpha_f = (vy + r * b) * inv_vx - t["gamma"] * moving
    alpha_r = (vy - a * r) * inv_vx
    f_fy = t["c_y"] * alpha_f
    f_ry = t["c_y"] * alpha_r
    c, s = np.cos(theta), np.sin(theta)
    front_lat = f_fy * t["cg"] + t["fx_s"]
    return (
        vx * c - vy * s,
        vx * s + vy * c,
        r,
        (t["f_rx"] - f_fy * t["sg"] + t["fx_c"]) / p.mass + vy * r,
        (f_ry + front_lat) / p.mass - vx * r,
        (b * front_lat - a * f_ry) / p.inertia_z,
    )


def _dynamic_rhs(states, inputs, params, vx_epsilon=VX_EPSILON):
    states = np.atleast_2d(states)
    t = _dynamic_terms(np.atleast_2d(inputs), params, vx_epsilon)
    return np.stack(_dynamic_derivs(states[:, 2], states[:, 3], states[:, 4], states[:, 5], t),
                    axis=-1)


def _dynamic_rollout(x0, inputs, params, vx_epsilon, duration, substep):
    """RK4 specialised to the bicycle model, on per-component arrays."""
    n, last = _step_count(duration, substep)
    t = _dynamic_terms(inputs, params, vx_epsilon)
    x = [np.array(x0[:, i], dtype=float) for i in range(6)]
    out = np.empty((6, n + 1, x0.shape[0]))
    for i in range(6):
        out[i, 0] = x[i]
    for step in range(n):
        h = substep if step < n - 1 else last
        k1 = _dynamic_derivs(x[2], x[3], x[4], x[5], t)
        y = [xi + 0.5 * h * ki for xi, ki in zip(x, k1)]
        k2 = _dynamic_derivs(y[2], y[3], y[4], y[5], t)
        y = [xi + 0.5 * h * ki for xi, ki in zip(x, k2)]
        k3 = _dynamic_derivs(y[2], y[3], y[4], y[5], t)
        y = [xi + h * ki for xi, ki in zip(x, k3)]
        k4 = _dynamic_derivs(y[2], y[3], y[4], y[5], t)
        x = [xi + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
             for xi, a1, a2, a3, a4 in zip(x, k1, k2, k3, k4)]
        x[2] = wrap_angle(x[2])
        for i in range(6):
            out[i, step + 1] = x[i]
    return np.ascontiguousarray(out.transpose(2, 1, 0))


def _step_count(duration, substep):
    if not duration > 0 or not substep > 0:
        raise ValueError("duration and substep must be positive")
    if substep > duration * (1 + 1e-12):
        raise ValueError("substep must not exceed duration")
    n = int(math.ceil(duration / substep - 1e-9))
    last = duration - (n - 1) * substep
    return n, last


def rk4_rollout(rhs, x0, inputs, duration, substep):
    """Batched RK4 from states ``x0`` (N, d) under constant ``inputs`` (N, k).

    Returns an (N, n_steps + 1, d) array. Heading is re-wrapped after
    every step.
    """
    n, last = _step_count(duration, substep)
    x = np.array(x0, dtype=float)
    out = np.empty((x.shape[0], n + 1, x.shape[1]))
    out[:, 0] = x
    for i in range(n):
        h = substep if i < n - 1 else last
        k1 = rhs(x, inputs)
        k2 = rhs(x + 0.5 * h * k1, inputs)
        k3 = rhs(x + 0.5 * h * k2, inputs)
        k4 = rhs(x + h * k3, inputs)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        x[:, 2] = wrap_angle(x[:, 2])
        out[:, i + 1] = x
    return out


class KinematicCar:
    """Low-speed car: position and heading driven by speed and steering."""

    kind = "kinematic"
    dim = 3

    def __init__(self, params=None, duration=1.0, substep=0.01):
        self.params = params or VehicleParams()
        self.duration = duration
        self.substep = substep
        self._templates = {}

    def rhs(self, states, inputs):
        return _kinematic_rhs(states, inputs, self.params)

    def input_array(self, catalog):
        return np.array([[u.v, u.gamma] for u in catalog], dtype=float)

    def integrate_batch(self, x0, inputs, duration, substep):
        return rk4_rollout(self.rhs, x0, inputs, duration, substep)

    def rollout(self, state, inputs):
        """Trajectories of every input in ``inputs`` applied from ``state``.

        The kinematic model is equivariant under planar rigid motions, so
        trajectories are integrated once from the origin and then moved
        onto ``state``.
        """
        key = (inputs.tobytes(), self.duration, self.substep)
        tmpl = self._templates.get(key)
        if tmpl is None:
            origin = np.zeros((inputs.shape[0], 3))
            tmpl = rk4_rollout(self.rhs, origin, inputs, self.duration, self.substep)
            self._templates[key] = tmpl
        x0, y0, th0 = float(state[0]), float(state[1]), float(state[2])
        c, s = math.cos(th0), math.sin(th0)
        out = np.empty_like(tmpl)
        out[..., 0] = x0 + c * tmpl[..., 0] - s * tmpl[..., 1]
        out[..., 1] = y0 + s * tmpl[..., 0] + c * tmpl[..., 1]
        out[..., 2] = wrap_angle(th0 + tmpl[..., 2])
        return out


class DynamicCar:
    """High-speed bicycle model with linear tire forces."""

    kind = "dynamic"
    dim = 6

    def __init__(self, params=None, duration=0.5, substep=0.01, vx_epsilon=VX_EPSILON):
        self.params = params or VehicleParams()
        self.duration = duration
        self.substep = substep
        self.vx_epsilon = vx_epsilon

    def rhs(self, states, inputs):
        return _dynamic_rhs(states, inputs, self.params, self.vx_epsilon)

    def input_array(self, catalog):
        return np.array([[u.f_fx, u.f_rx, u.gamma, u.c_y] for u in catalog], dtype=float)

    def integrate_batch(self, x0, inputs, duration, substep):
        return _dynamic_rollout(x0, inputs, self.params, self.vx_epsilon, duration, substep)

    def rollout(self, state, inputs):
        x0 = np.broadcast_to(np.asarray(state, dtype=float), (inputs.shape[0], self.dim))
        return self.integrate_batch(x0, inputs, self.duration, self.substep)


def integrate(state, u, duration, substep, model):
    """Trajectory of one constant input, initial state included.

    ``model`` is a :class:`KinematicCar` or :class:`DynamicCar`; ``u`` is
    a catalog entry or a plain sequence in the model's input layout.
    """
    state = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    return model.integrate_batch(state[None, :], u[None, :], duration, substep)[0]


def make_model(kind, params=None, duration=None, substep=0.01, vx_epsilon=VX_EPSILON):
    if kind == "kinematic":
        return KinematicCar(params, 1.0 if duration is None else duration, substep)
    if kind == "dynamic":
        return DynamicCar(params, 0.5 if duration is None else duration, substep, vx_epsilon)
    raise ValueError(f"unknown model kind {kind!r}")
