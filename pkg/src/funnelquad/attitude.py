"""Euler-angle (Z-Y-X) kinematics and the matrices used by the model and the controller."""
from __future__ import annotations

import math

import numpy as np

from ._jit import njit
from .errors import InversionError, SingularityError

SINGULAR_TOL = 1e-9
TWO_PI = 2.0 * math.pi


@njit
def wrap_kernel(x):
    return x - TWO_PI * math.ceil((x - math.pi) / TWO_PI)


def wrap_angle(x):
    """Wrap to (-pi, pi]."""
    if np.ndim(x) == 0:
        return wrap_kernel(float(x))
    x = np.asarray(x, dtype=float)
    return x - TWO_PI * np.ceil((x - math.pi) / TWO_PI)


def _angles(eta):
    phi, theta, psi = (float(a) for a in np.asarray(eta, dtype=float).reshape(3))
    return phi, theta, psi


def rot_body_to_inertial(eta) -> np.ndarray:
    """R_IB = Rz(psi) Ry(theta) Rx(phi)."""
    phi, theta, psi = _angles(eta)
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    return np.array([
        [cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf],
        [sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf],
        [-st, ct * sf, ct * cf],
    ])


def tilt_vector(phi: float, theta: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), -math.sin(phi)])


def tilt_jacobian(phi: float, theta: float) -> np.ndarray:
    """d tilt_vector / d(phi, theta)."""
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    if abs(cf * ct * cf) < SINGULAR_TOL:
        raise SingularityError(f"tilt Jacobian singular at phi={phi}, theta={theta}")
    return np.array([[-st * sf, ct * cf], [-cf, 0.0]])


def heading_block(psi: float, theta: float) -> np.ndarray:
    ct = math.cos(theta)
    if abs(ct) < SINGULAR_TOL:
        raise SingularityError(f"heading block singular at theta={theta}")
    cp, sp = math.cos(psi), math.sin(psi)
    return np.array([[cp / ct, sp / ct], [-sp, cp]])


def euler_rate_map(eta) -> np.ndarray:
    """R_T with eta_dot = R_T omega."""
    _, theta, psi = _angles(eta)
    top = heading_block(psi, theta)
    tt = math.tan(theta)
    out = np.zeros((3, 3))
    out[:2, :2] = top
    out[2] = (math.cos(psi) * tt, math.sin(psi) * tt, 1.0)
    return out


def yaw_rotation_2d(psi: float) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s], [s, c]])


def tilt_to_angles(tv) -> tuple[float, float]:
    """Invert tilt_vector: returns (phi, theta)."""
    t1, t2 = (float(v) for v in np.asarray(tv, dtype=float).reshape(2))
    if not (abs(t2) < 1.0):
        raise InversionError(f"tilt component {t2} outside (-1, 1)")
    phi = -math.asin(t2)
    arg = t1 / math.cos(phi)
    if not (abs(arg) <= 1.0):
        raise InversionError(f"tilt vector {(t1, t2)} is not reachable")
    return phi, math.asin(arg)


@njit
def tilt_to_angles_kernel(t1, t2):
    """NaN-returning variant for telemetry loops."""
    if not abs(t2) < 1.0:
        return math.nan, math.nan
    phi = -math.asin(t2)
    arg = t1 / math.cos(phi)
    if not abs(arg) <= 1.0:
        return phi, math.nan
    return phi, math.asin(arg)
