"""Reference trajectories: lemniscate ascent, boat landing and hover."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .controller import ReferenceSample

TRAJECTORY_NAMES = ("lemniscate_ascent", "landing", "hover")

# Boat steering input: value on each segment and the segment end times.
BOAT_SWITCHES = (0.0, 3 * math.pi / 4, 9 * math.pi / 4, 11 * math.pi / 4, 10.0)
BOAT_INPUTS = (-1.0, 1.0, -1.0, 0.0)
BOAT_HORIZON = 10.0


@dataclass(frozen=True)
class BoatState:
    p_b: tuple
    alpha: float


@njit
def boat_kernel(t):
    """Closed-form unicycle state (x, y, alpha, u) at t >= 0.

    Past t = 10 the last segment (u = 0) is simply extended.
    """
    x = 0.0
    y = 0.0
    a = 0.0
    u = 0.0
    for i in range(4):
        t0 = BOAT_SWITCHES[i]
        t1 = BOAT_SWITCHES[i + 1] if i < 3 else math.inf
        u = BOAT_INPUTS[i]
        d = min(t1, t) - t0
        if u == 0.0:
            x += d * math.cos(a)
            y += d * math.sin(a)
        else:
            a1 = a + u * d
            x += (math.sin(a1) - math.sin(a)) / u
            y -= (math.cos(a1) - math.cos(a)) / u
            a = a1
        if t <= t1:
            break
    return x, y, a, u


@njit
def landing_height(t, z_d, t_d):
    return z_d * (1.0 - 1.0 / (1.0 + math.exp(-(t - t_d))))


@njit
def reference_kernel(code, params, t):
    """(p_x, p_y, p_z, psi) of the reference selected by code."""
    if code == 0:
        s = math.sin(t)
        c = math.cos(t)
        d = 1.0 + s * s
        return c / d, s * c / d, 1.0 + t / 5.0, 0.0
    if code == 1:
        x, y, a, u = boat_kernel(t)
        return x, y, landing_height(t, params[0], params[1]), 0.0
    return params[0], params[1], params[2], params[3]


def _check_t(t):
    t = float(t)
    if not (t >= 0 and math.isfinite(t)):
        raise ValueError(f"time must be finite and nonnegative, got {t}")
    return t


def lemniscate_ascent(t: float) -> ReferenceSample:
    t = _check_t(t)
    s, c = math.sin(t), math.cos(t)
    d = 1.0 + s * s
    p = (c / d, s * c / d, 1.0 + t / 5.0)
    dp = ((s * s - 3.0) * s / d**2, (1.0 - 3.0 * s * s) / d**2, 0.2)
    ddp = ((-s**4 + 12.0 * s * s - 3.0) * c / d**3,
           (28.0 * math.sin(2 * t) + 6.0 * math.sin(4 * t)) / (math.cos(2 * t) - 3.0) ** 3,
           0.0)
    return ReferenceSample(p_r=p, psi_r=0.0, dp_r=dp, ddp_r=ddp)


def boat_path(t: float) -> BoatState:
    t = _check_t(t)
    if t > BOAT_HORIZON:
        raise ValueError(f"boat path is defined on [0, {BOAT_HORIZON}], got t={t}")
    x, y, a, _ = boat_kernel(t)
    return BoatState(p_b=(x, y), alpha=a)


def landing_reference(t: float, z_d: float = 5.0, t_d: float = 5.0) -> ReferenceSample:
    boat = boat_path(t)
    _, _, a, u = boat_kernel(float(t))
    sig = 1.0 / (1.0 + math.exp(-(t - t_d)))
    z = landing_height(float(t), z_d, t_d)
    dz = -z_d * sig * (1.0 - sig)
    ddz = -z_d * sig * (1.0 - sig) * (1.0 - 2.0 * sig)
    dp = (math.cos(a), math.sin(a), dz)
    ddp = (-u * math.sin(a), u * math.cos(a), ddz)
    return ReferenceSample(p_r=(*boat.p_b, z), psi_r=0.0, dp_r=dp, ddp_r=ddp)


class hover:
    """Constant reference generator: ``hover(p, psi)(t)`` returns the same sample for every t."""

    def __init__(self, p, psi: float = 0.0):
        self.sample = ReferenceSample(p_r=p, psi_r=psi)

    def __call__(self, t: float) -> ReferenceSample:
        _check_t(t)
        return self.sample


@dataclass(frozen=True)
class TrajectoryKind:
    name: str = "lemniscate_ascent"
    z_d: float = 5.0
    t_d: float = 5.0
    p: tuple = (0.0, 0.0, 0.0)
    psi: float = 0.0

    def __post_init__(self):
        if self.name not in TRAJECTORY_NAMES:
            raise ValueError(f"unknown trajectory {self.name!r}; expected one of {TRAJECTORY_NAMES}")
        if self.name == "landing" and not (self.z_d > 0 and self.t_d > 0):
            raise ValueError(f"landing needs z_d > 0 and t_d > 0, got {self.z_d}, {self.t_d}")
        p = tuple(float(v) for v in self.p)
        if len(p) != 3 or not all(math.isfinite(v) for v in p):
            raise ValueError(f"hover position must be 3 finite numbers, got {self.p}")
        object.__setattr__(self, "p", p)

    @property
    def code(self) -> int:
        return TRAJECTORY_NAMES.index(self.name)

    @property
    def params(self) -> np.ndarray:
        if self.name == "landing":
            return np.array([self.z_d, self.t_d, 0.0, 0.0])
        if self.name == "hover":
            return np.array([*self.p, self.psi])
        return np.zeros(4)

    def __call__(self, t: float) -> ReferenceSample:
        if self.name == "lemniscate_ascent":
            return lemniscate_ascent(t)
        if self.name == "landing":
            return landing_reference(t, self.z_d, self.t_d)
        return hover(self.p, self.psi)(t)
