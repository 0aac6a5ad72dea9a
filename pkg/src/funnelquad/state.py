"""Vehicle state and command shared by the plant, the controller and the simulator.

They live in their own module so the controller can use them without
importing the plant (and with it the model parameters).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attitude import wrap_angle


def _vec3(name, value):
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VehicleState:
    p: np.ndarray
    v: np.ndarray
    eta: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        for name in ("p", "v", "eta", "omega"):
            object.__setattr__(self, name, _vec3(name, getattr(self, name)))
        phi, theta, psi = self.eta
        if not (abs(phi) < math.pi / 2 and abs(theta) < math.pi / 2):
            raise ValueError(f"roll/pitch must lie in (-pi/2, pi/2), got {phi}, {theta}")
        wrapped = self.eta.copy()
        wrapped[2] = wrap_angle(psi)
        object.__setattr__(self, "eta", _vec3("eta", wrapped))

    @classmethod
    def zero(cls) -> "VehicleState":
        return cls(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))

    @classmethod
    def from_array(cls, x) -> "VehicleState":
        x = np.asarray(x, dtype=float).reshape(12)
        return cls(x[0:3], x[3:6], x[6:9], x[9:12])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, self.eta, self.omega])

    def __eq__(self, other):
        if not isinstance(other, VehicleState):
            return NotImplemented
        return bool(np.array_equal(self.as_array(), other.as_array()))

    def __repr__(self):
        return (f"VehicleState(p={self.p.tolist()}, v={self.v.tolist()}, "
                f"eta={self.eta.tolist()}, omega={self.omega.tolist()})")


@dataclass(frozen=True, eq=False)
class ControlCommand:
    F_z: float
    tau: np.ndarray

    def __post_init__(self):
        if not math.isfinite(self.F_z):
            raise ValueError(f"F_z must be finite, got {self.F_z}")
        object.__setattr__(self, "F_z", float(self.F_z))
        object.__setattr__(self, "tau", _vec3("tau", self.tau))

    def __eq__(self, other):
        if not isinstance(other, ControlCommand):
            return NotImplemented
        return self.F_z == other.F_z and np.array_equal(self.tau, other.tau)
