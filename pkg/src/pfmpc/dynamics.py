"""Discrete-time dynamic bicycle model.

State ``[px, py, phi, vx, vy, omega]`` (global pose, body-frame velocities, yaw
rate), control ``[accel, steer]``. The lateral rows use the implicit-Euler style
update whose denominators stay positive for forward speeds, so the model is
stable at the 0.1 s step used everywhere in this package.

Below ``vx_lo`` the lateral states switch to a kinematic bicycle (``vy = 0``,
``omega = vx tan(steer) / (lf + lr)``) and the two updates are blended linearly
between ``vx_lo`` and ``vx_hi``. Braking never drives ``vx`` negative.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K


class DynamicsError(ValueError):
    """Raised for non-finite states/controls or malformed rollouts."""


@dataclass(frozen=True)
class VehicleState:
    px: float = 0.0
    py: float = 0.0
    phi: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0
    # set by step() when the low-speed branch or the no-reverse clamp was used
    fallback: bool = field(default=False, compare=False)

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.phi, self.vx, self.vy, self.omega])

    @classmethod
    def from_array(cls, x, fallback: bool = False) -> "VehicleState":
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]), float(x[4]), float(x[5]), fallback)

    @property
    def speed(self) -> float:
        return float(np.hypot(self.vx, self.vy))


@dataclass(frozen=True)
class ControlInput:
    accel: float = 0.0
    steer: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.accel, self.steer])

    @classmethod
    def from_array(cls, u) -> "ControlInput":
        return cls(float(u[0]), float(u[1]))


_INF = float("inf")


@dataclass(frozen=True)
class VehicleParams:
    """Vehicle constants. Cornering stiffnesses are negative (N/rad) and enter the model as signed values."""

    mass: float = 1845.0
    lf: float = 1.265
    lr: float = 1.682
    kf: float = -128916.0
    kr: float = -85944.0
    iz: float = 4175.0
    dt: float = 0.1
    u_min: tuple = (-6.0, -0.5)
    u_max: tuple = (3.0, 0.5)
    x_min: tuple = (-_INF, -_INF, -_INF, 0.0, -5.0, -2.0)
    x_max: tuple = (_INF, _INF, _INF, 30.0, 5.0, 2.0)
    width: float = 2.0
    length: float = 4.8
    vx_lo: float = 0.25
    vx_hi: float = 0.5
    den_eps: float = 1e-6

    def __post_init__(self):
        for name in ("mass", "iz", "lf", "lr", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"VehicleParams.{name} must be positive")
        if not 0 <= self.vx_lo < self.vx_hi:
            raise ValueError("need 0 <= vx_lo < vx_hi")
        if any(lo > hi for lo, hi in zip(self.u_min, self.u_max)):
            raise ValueError("u_min must not exceed u_max")
        object.__setattr__(self, "u_min", tuple(float(v) for v in self.u_min))
        object.__setattr__(self, "u_max", tuple(float(v) for v in self.u_max))
        object.__setattr__(self, "x_min", tuple(float(v) for v in self.x_min))
        object.__setattr__(self, "x_max", tuple(float(v) for v in self.x_max))
        object.__setattr__(self, "_l", self.lf * self.kf - self.lr * self.kr)
        object.__setattr__(self, "_arr", np.array([
            self.mass, self.lf, self.lr, self.kf, self.kr, self.iz, self.dt,
            self.vx_lo, self.vx_hi, self.den_eps,
        ]))

    @property
    def l(self) -> float:  # noqa: E743
        """Stiffness moment ``lf*kf - lr*kr``."""
        return self._l

    @property
    def wheelbase(self) -> float:
        return self.lf + self.lr

    def as_array(self) -> np.ndarray:
        return self._arr

    def clip_control(self, control: ControlInput) -> ControlInput:
        return ControlInput(
            min(max(control.accel, self.u_min[0]), self.u_max[0]),
            min(max(control.steer, self.u_min[1]), self.u_max[1]),
        )


def _check_finite(x, what):
    if not np.all(np.isfinite(x)):
        raise DynamicsError(f"non-finite {what}: {x}")


def step(state: VehicleState, control: ControlInput, params: VehicleParams) -> VehicleState:
    x = state.as_array()
    u = control.as_array()
    _check_finite(x, "state")
    _check_finite(u, "control")
    out = np.empty(6)
    flag = K.step_into(x, u[0], u[1], params.as_array(), out)
    _check_finite(out, "successor state")
    return VehicleState.from_array(out, fallback=flag != K.DYNAMIC)


def rollout(state0: VehicleState, controls: Sequence[ControlInput], params: VehicleParams) -> list:
    if len(controls) < 1:
        raise DynamicsError("rollout needs at least one control")
    states = [state0]
    for k, u in enumerate(controls):
        try:
            states.append(step(states[-1], u, params))
        except DynamicsError as exc:
            raise DynamicsError(f"rollout failed at index {k}: {exc}") from exc
    return states


def rollout_array(x0: np.ndarray, U: np.ndarray, params: VehicleParams) -> np.ndarray:
    """Array form of rollout: U is (N, 2), returns (N+1, 6)."""
    U = np.ascontiguousarray(U, dtype=float)
    X = np.empty((U.shape[0] + 1, 6))
    flags = np.empty(U.shape[0], dtype=np.int64)
    K.rollout_into(np.asarray(x0, dtype=float), U, params.as_array(), X, flags)
    return X


def jacobians(state: VehicleState, control: ControlInput, params: VehicleParams):
    """Analytic (A, B) = (df/dx, df/du) of one step; A is 6x6, B is 6x2."""
    x = state.as_array()
    _check_finite(x, "state")
    A = np.empty((6, 6))
    B = np.empty((6, 2))
    K.jacobians_into(x, float(control.accel), float(control.steer), params.as_array(), A, B)
    return A, B


def wrap_angle(a: float) -> float:
    """Wrap onto (-pi, pi]."""
    return float(K.wrap_angle(float(a)))
