"""Exponential performance functions and the error transformation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ._jit import njit
from .errors import FunnelViolation

# Error channel order used everywhere (telemetry, kernels, config).
CHANNELS = (
    "p_x", "p_y", "p_z",
    "v_x", "v_y", "v_z",
    "tilt_1", "tilt_2", "psi",
    "omega_phi", "omega_theta", "omega_psi",
)
CHANNEL_INDEX = {name: i for i, name in enumerate(CHANNELS)}
STAGES = ("position", "velocity", "attitude", "rate")
CHANNEL_STAGE = tuple(STAGES[i // 3] for i in range(12))

# Above this |xi| the transform switches to the log1p form.
NEAR_BOUNDARY = 1.0 - 1e-12

NormalizedError = float


@njit
def rho_value(rho0, rho_inf, l, t):
    return (rho0 - rho_inf) * math.exp(-l * t) + rho_inf


@njit
def atanh_kernel(xi):
    if abs(xi) > NEAR_BOUNDARY:
        return 0.5 * (math.log1p(xi) - math.log1p(-xi))
    return math.atanh(xi)


@njit
def feedback_term(e, rho):
    """Return (xi, r*eps/rho) for one channel; the caller checks |xi| < 1."""
    xi = e / rho
    return xi, atanh_kernel(xi) / (1.0 - xi * xi) / rho


@dataclass(frozen=True)
class PerformanceFunction:
    rho0: float
    rho_inf: float
    l: float

    def __post_init__(self):
        vals = (self.rho0, self.rho_inf, self.l)
        if not all(math.isfinite(float(v)) for v in vals):
            raise ValueError(f"performance function parameters must be finite: {vals}")
        if not self.rho0 > self.rho_inf > 0:
            raise ValueError(f"need rho0 > rho_inf > 0, got rho0={self.rho0}, rho_inf={self.rho_inf}")
        if not self.l > 0:
            raise ValueError(f"need l > 0, got {self.l}")

    def __call__(self, t):
        return evaluate(self, t)

    def as_tuple(self) -> tuple[float, float, float]:
        return (float(self.rho0), float(self.rho_inf), float(self.l))


def _check_time(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError(f"time must be nonnegative, got {t}")
    return arr


def evaluate(pf: PerformanceFunction, t):
    """rho(t) = (rho0 - rho_inf) exp(-l t) + rho_inf, for scalar or array t."""
    arr = _check_time(t)
    out = (pf.rho0 - pf.rho_inf) * np.exp(-pf.l * arr) + pf.rho_inf
    return float(out) if out.ndim == 0 else out


def evaluate_derivative(pf: PerformanceFunction, t):
    arr = _check_time(t)
    out = -pf.l * (pf.rho0 - pf.rho_inf) * np.exp(-pf.l * arr)
    return float(out) if out.ndim == 0 else out


def normalize(e, rho):
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(~(rho_arr > 0)):
        raise ValueError(f"funnel value must be positive, got {rho}")
    out = np.asarray(e, dtype=float) / rho_arr
    return float(out) if out.ndim == 0 else out


def _check_inside(xi, channel, t):
    arr = np.asarray(xi, dtype=float)
    bad = ~(np.abs(arr) < 1.0)
    if np.any(bad):
        first = float(arr.reshape(-1)[np.flatnonzero(bad.reshape(-1))[0]])
        raise FunnelViolation(channel=channel, t=t, xi=first)
    return arr


def transform(xi, channel=None, t=None):
    """atanh(xi); raises FunnelViolation when |xi| >= 1."""
    arr = _check_inside(xi, channel, t)
    if arr.ndim == 0:
        return atanh_kernel(float(arr))
    near = np.abs(arr) > NEAR_BOUNDARY
    with np.errstate(divide="ignore"):
        out = np.where(near, 0.5 * (np.log1p(arr) - np.log1p(-arr)), np.arctanh(arr))
    return out


def transform_slope(xi, channel=None, t=None):
    """d atanh / d xi = 1 / (1 - xi^2)."""
    arr = _check_inside(xi, channel, t)
    out = 1.0 / (1.0 - arr * arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FunnelSet:
    pos: tuple[PerformanceFunction, PerformanceFunction, PerformanceFunction]
    vel: tuple[PerformanceFunction, PerformanceFunction, PerformanceFunction]
    tilt: tuple[PerformanceFunction, PerformanceFunction]
    yaw: PerformanceFunction
    rate: tuple[PerformanceFunction, PerformanceFunction, PerformanceFunction]

    def __post_init__(self):
        for name, n in (("pos", 3), ("vel", 3), ("tilt", 2), ("rate", 3)):
            group = tuple(getattr(self, name))
            if len(group) != n or not all(isinstance(p, PerformanceFunction) for p in group):
                raise ValueError(f"FunnelSet.{name} needs {n} PerformanceFunction entries")
            object.__setattr__(self, name, group)
        if not isinstance(self.yaw, PerformanceFunction):
            raise ValueError("FunnelSet.yaw must be a PerformanceFunction")

    def channels(self) -> tuple[PerformanceFunction, ...]:
        """All 12 funnels in CHANNELS order."""
        return (*self.pos, *self.vel, *self.tilt, self.yaw, *self.rate)

    def __getitem__(self, channel: str) -> PerformanceFunction:
        return self.channels()[CHANNEL_INDEX[channel]]

    def as_array(self) -> np.ndarray:
        """(12, 3) array of (rho0, rho_inf, l) rows for the kernels."""
        return np.array([pf.as_tuple() for pf in self.channels()], dtype=float)

    def values(self, t: float) -> np.ndarray:
        return np.array([evaluate(pf, t) for pf in self.channels()])

    @classmethod
    def from_channels(cls, funnels) -> "FunnelSet":
        """Build from a sequence of 12 funnels or a mapping channel -> funnel."""
        if isinstance(funnels, Mapping):
            missing = [ch for ch in CHANNELS if ch not in funnels]
            if missing:
                raise ValueError(f"missing funnel for channel(s): {', '.join(missing)}")
            seq = [funnels[ch] for ch in CHANNELS]
        else:
            seq = list(funnels)
            if len(seq) != 12:
                raise ValueError(f"need 12 funnels, got {len(seq)}")
        seq = [pf if isinstance(pf, PerformanceFunction) else PerformanceFunction(*pf) for pf in seq]
        return cls(pos=tuple(seq[0:3]), vel=tuple(seq[3:6]), tilt=tuple(seq[6:8]),
                   yaw=seq[8], rate=tuple(seq[9:12]))
