"""Quadrotor rigid-body model with bounded exogenous disturbances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .attitude import SINGULAR_TOL
from .errors import SingularityError
from .state import ControlCommand, VehicleState

__all__ = [
    "VehicleState", "QuadParams", "ControlCommand", "DisturbanceSpec",
    "DISTURBANCE_KINDS", "disturbance", "dynamics_rhs",
]

DISTURBANCE_KINDS = ("none", "constant", "sinusoid", "linear_drag")


def _positive3(name, value):
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)) or not np.all(arr > 0):
        raise ValueError(f"{name} must be 3 positive finite numbers, got {value}")
    arr.setflags(write=False)
    return arr


def _finite3(name, value):
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be 3 finite numbers, got {value}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QuadParams:
    m: float = 1.0
    inertia_diag: np.ndarray = field(default_factory=lambda: np.array([0.01, 0.01, 0.02]))
    g: float = 9.81

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m > 0):
            raise ValueError(f"mass must be positive, got {self.m}")
        if not (math.isfinite(self.g) and self.g >= 0):
            raise ValueError(f"g must be nonnegative, got {self.g}")
        object.__setattr__(self, "inertia_diag", _positive3("inertia_diag", self.inertia_diag))

    def __eq__(self, other):
        if not isinstance(other, QuadParams):
            return NotImplemented
        return (self.m == other.m and self.g == other.g
                and np.array_equal(self.inertia_diag, other.inertia_diag))


@dataclass(frozen=True, eq=False)
class DisturbanceSpec:
    kind: str = "none"
    force_params: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque_params: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frequency: float = 0.0

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}; expected one of {DISTURBANCE_KINDS}")
        object.__setattr__(self, "force_params", _finite3("force_params", self.force_params))
        object.__setattr__(self, "torque_params", _finite3("torque_params", self.torque_params))
        if not math.isfinite(self.frequency):
            raise ValueError(f"frequency must be finite, got {self.frequency}")
        object.__setattr__(self, "frequency", float(self.frequency))

    @property
    def code(self) -> int:
        return DISTURBANCE_KINDS.index(self.kind)

    def __eq__(self, other):
        if not isinstance(other, DisturbanceSpec):
            return NotImplemented
        return (self.kind == other.kind and self.frequency == other.frequency
                and np.array_equal(self.force_params, other.force_params)
                and np.array_equal(self.torque_params, other.torque_params))


@njit
def disturbance_kernel(kind, fp, tp, freq, x, t, out):
    """Write (F_d, tau_d) into out[0:6] for state vector x."""
    if kind == 0:
        for i in range(6):
            out[i] = 0.0
    elif kind == 1:
        for i in range(3):
            out[i] = fp[i]
            out[3 + i] = tp[i]
    elif kind == 2:
        s = math.sin(freq * t)
        for i in range(3):
            out[i] = fp[i] * s
            out[3 + i] = tp[i] * s
    else:
        for i in range(3):
            out[i] = -fp[i] * x[3 + i]
            out[3 + i] = -tp[i] * x[9 + i]


@njit
def rhs_kernel(t, x, fz, tau_x, tau_y, tau_z, m, inertia, g, kind, fp, tp, freq, dist, dx):
    """State derivative into dx.  Returns False if the Euler-rate map is singular."""
    phi = x[6]
    theta = x[7]
    psi = x[8]
    cf = math.cos(phi)
    sf = math.sin(phi)
    ct = math.cos(theta)
    st = math.sin(theta)
    cp = math.cos(psi)
    sp = math.sin(psi)
    if abs(ct) < SINGULAR_TOL:
        return False
    disturbance_kernel(kind, fp, tp, freq, x, t, dist)
    dx[0] = x[3]
    dx[1] = x[4]
    dx[2] = x[5]
    # third column of R_IB times F_z
    dx[3] = ((cp * st * cf + sp * sf) * fz + dist[0]) / m
    dx[4] = ((sp * st * cf - cp * sf) * fz + dist[1]) / m
    dx[5] = (ct * cf * fz + dist[2]) / m - g
    wx = x[9]
    wy = x[10]
    wz = x[11]
    dx[6] = (cp * wx + sp * wy) / ct
    dx[7] = -sp * wx + cp * wy
    dx[8] = (cp * wx + sp * wy) * st / ct + wz
    ix = inertia[0]
    iy = inertia[1]
    iz = inertia[2]
    # I^{-1} (-omega x I omega + tau + tau_d)
    dx[9] = (-(wy * iz * wz - wz * iy * wy) + tau_x + dist[3]) / ix
    dx[10] = (-(wz * ix * wx - wx * iz * wz) + tau_y + dist[4]) / iy
    dx[11] = (-(wx * iy * wy - wy * ix * wx) + tau_z + dist[5]) / iz
    return True


def _state_array(state) -> np.ndarray:
    if isinstance(state, VehicleState):
        return state.as_array()
    return np.array(state, dtype=float).reshape(12)


def disturbance(spec: DisturbanceSpec, state, t: float) -> tuple[np.ndarray, np.ndarray]:
    out = np.empty(6)
    disturbance_kernel(spec.code, np.array(spec.force_params), np.array(spec.torque_params),
                       spec.frequency, _state_array(state), float(t), out)
    return out[:3].copy(), out[3:].copy()


def dynamics_rhs(state, cmd: ControlCommand, spec: DisturbanceSpec, params: QuadParams, t: float) -> np.ndarray:
    """12-vector (p_dot, v_dot, eta_dot, omega_dot)."""
    x = _state_array(state)
    dx = np.empty(12)
    dist = np.empty(6)
    tau = np.array(cmd.tau, dtype=float)
    ok = rhs_kernel(float(t), x, cmd.F_z, tau[0], tau[1], tau[2], params.m,
                    np.array(params.inertia_diag), params.g, spec.code,
                    np.array(spec.force_params), np.array(spec.torque_params),
                    spec.frequency, dist, dx)
    if not ok:
        raise SingularityError(f"Euler-rate map singular at theta={x[7]}", t=float(t))
    return dx
