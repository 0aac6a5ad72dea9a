"""Model-free prescribed-performance cascade: position -> velocity -> tilt/yaw -> rate.

Nothing here knows the vehicle mass, inertia or disturbances.  The law only
reads the measured state, the reference and the funnel/gain design.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .attitude import SINGULAR_TOL, wrap_angle, wrap_kernel
from .errors import FunnelViolation, SingularityError, ThrustDegenerate
from .funnel import (CHANNEL_STAGE, CHANNELS, FunnelSet, PerformanceFunction,
                     atanh_kernel, evaluate, normalize, rho_value, transform,
                     transform_slope)
from .state import ControlCommand, VehicleState

# Kernel status codes.
STATUS_OK = 0
STATUS_VIOLATION = 1
STATUS_THRUST = 2
STATUS_SINGULAR = 3

# Layout of the diagnostics buffer filled by control_kernel.
D_VR = 0
D_TR = 3
D_WR = 5
D_E = 8
D_RHO = 20
D_XI = 32
D_EPS = 44
D_SIZE = 56

# |xi| used in place of a violating value in clamp mode.
CLAMP_XI = 1.0 - 1e-9


def _pos_vec(name, value, n):
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (n,) or not np.all(np.isfinite(arr)) or not np.all(arr > 0):
        raise ValueError(f"{name} must be {n} positive finite numbers, got {value}")
    return tuple(float(a) for a in arr)


def _pos_scalar(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class GainSet:
    k_p: tuple = (1.25, 1.25, 12.5)
    k_v_xy: tuple = (1.0, 2.0)
    k_v_z: float = 10.0
    k_phitheta: tuple = (3.0, 1.5)
    k_psi: float = 1.0
    k_omega: tuple = (10.0, 10.0, 10.0)

    def __post_init__(self):
        object.__setattr__(self, "k_p", _pos_vec("k_p", self.k_p, 3))
        object.__setattr__(self, "k_v_xy", _pos_vec("k_v_xy", self.k_v_xy, 2))
        object.__setattr__(self, "k_v_z", _pos_scalar("k_v_z", self.k_v_z))
        object.__setattr__(self, "k_phitheta", _pos_vec("k_phitheta", self.k_phitheta, 2))
        object.__setattr__(self, "k_psi", _pos_scalar("k_psi", self.k_psi))
        object.__setattr__(self, "k_omega", _pos_vec("k_omega", self.k_omega, 3))

    def as_array(self) -> np.ndarray:
        """Gains aligned with the 12 error channels."""
        return np.array([*self.k_p, *self.k_v_xy, self.k_v_z,
                         *self.k_phitheta, self.k_psi, *self.k_omega])


@dataclass(frozen=True)
class TheoremConditions:
    pi_bar: float = 1.2
    F_z_min: float = 1e-3

    def __post_init__(self):
        if not 0 < self.pi_bar < math.pi / 2:
            raise ValueError(f"pi_bar must lie in (0, pi/2), got {self.pi_bar}")
        if not (math.isfinite(self.F_z_min) and self.F_z_min > 0):
            raise ValueError(f"F_z_min must be positive, got {self.F_z_min}")


@dataclass(frozen=True, eq=False)
class ReferenceSample:
    p_r: np.ndarray
    psi_r: float = 0.0
    dp_r: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ddp_r: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dpsi_r: float = 0.0
    ddpsi_r: float = 0.0

    def __post_init__(self):
        for name in ("p_r", "dp_r", "ddp_r"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            if arr.shape != (3,) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be 3 finite numbers")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("psi_r", "dpsi_r", "ddpsi_r"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)

    def __eq__(self, other):
        if not isinstance(other, ReferenceSample):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("p_r", "psi_r", "dp_r", "ddp_r", "dpsi_r", "ddpsi_r"))


@dataclass(frozen=True, eq=False)
class ControlDiagnostics:
    v_r: np.ndarray
    T_tilt_r: np.ndarray
    omega_r: np.ndarray
    xi_all: np.ndarray
    eps_all: np.ndarray
    condition_flags: tuple
    F_z: float = math.nan
    e_all: np.ndarray = field(default_factory=lambda: np.full(12, math.nan))
    rho_all: np.ndarray = field(default_factory=lambda: np.full(12, math.nan))

    @classmethod
    def from_buffer(cls, diag, F_z, flags=(False, False, False)):
        return cls(v_r=diag[D_VR:D_VR + 3].copy(), T_tilt_r=diag[D_TR:D_TR + 2].copy(),
                   omega_r=diag[D_WR:D_WR + 3].copy(), xi_all=diag[D_XI:D_XI + 12].copy(),
                   eps_all=diag[D_EPS:D_EPS + 12].copy(), condition_flags=tuple(bool(f) for f in flags),
                   F_z=float(F_z), e_all=diag[D_E:D_E + 12].copy(),
                   rho_all=diag[D_RHO:D_RHO + 12].copy())


# ---------------------------------------------------------------- kernels

@njit
def _channel(i, e, t, funnels, clamp, diag):
    """Normalize channel i and return (inside, r*eps/rho)."""
    rho = rho_value(funnels[i, 0], funnels[i, 1], funnels[i, 2], t)
    xi = e / rho
    diag[D_E + i] = e
    diag[D_RHO + i] = rho
    diag[D_XI + i] = xi
    inside = abs(xi) < 1.0
    if not inside:
        if not clamp:
            return False, math.nan
        xi = math.copysign(CLAMP_XI, xi)
    eps = atanh_kernel(xi)
    diag[D_EPS + i] = eps
    return inside, eps / (1.0 - xi * xi) / rho


@njit
def _first_outside(diag, lo, hi):
    for i in range(lo, hi):
        if not abs(diag[D_XI + i]) < 1.0:
            return i
    return -1


@njit
def control_kernel(t, x, pr0, pr1, pr2, psi_r, funnels, gains, fz_min, clamp, cmd, diag):
    """Evaluate the cascade at (t, x).

    Writes (F_z, tau) into cmd and intermediate signals into diag.  Returns
    (status, channel).  In clamp mode violating channels are evaluated at
    |xi| = 1 - 1e-9 and the status stays OK; the caller reads diag to log them.
    """
    for i in range(D_SIZE):
        diag[i] = math.nan
    for i in range(4):
        cmd[i] = math.nan
    # position loop
    ok0, s0 = _channel(0, x[0] - pr0, t, funnels, clamp, diag)
    ok1, s1 = _channel(1, x[1] - pr1, t, funnels, clamp, diag)
    ok2, s2 = _channel(2, x[2] - pr2, t, funnels, clamp, diag)
    if not (ok0 and ok1 and ok2) and not clamp:
        return STATUS_VIOLATION, _first_outside(diag, 0, 3)
    vr0 = -gains[0] * s0
    vr1 = -gains[1] * s1
    vr2 = -gains[2] * s2
    diag[D_VR] = vr0
    diag[D_VR + 1] = vr1
    diag[D_VR + 2] = vr2
    # velocity loop
    ok0, a0 = _channel(3, x[3] - vr0, t, funnels, clamp, diag)
    ok1, a1 = _channel(4, x[4] - vr1, t, funnels, clamp, diag)
    ok2, az = _channel(5, x[5] - vr2, t, funnels, clamp, diag)
    if not (ok0 and ok1 and ok2) and not clamp:
        return STATUS_VIOLATION, _first_outside(diag, 3, 6)
    fz = -gains[5] * az
    cmd[0] = fz
    phi = x[6]
    theta = x[7]
    psi = x[8]
    cp = math.cos(psi)
    sp = math.sin(psi)
    # R_psi^T applied to the horizontal feedback terms
    h0 = cp * a0 + sp * a1
    h1 = -sp * a0 + cp * a1
    if h0 == 0.0 and h1 == 0.0:
        tr0 = 0.0
        tr1 = 0.0
    elif fz == 0.0:
        # only an exact zero makes the division impossible; small |F_z| is
        # reported through condition flag (a)
        return STATUS_THRUST, 5
    else:
        tr0 = -gains[3] * h0 / fz
        tr1 = -gains[4] * h1 / fz
    diag[D_TR] = tr0
    diag[D_TR + 1] = tr1
    # tilt and yaw loops
    cf = math.cos(phi)
    sf = math.sin(phi)
    ct = math.cos(theta)
    st = math.sin(theta)
    ok0, b0 = _channel(6, st * cf - tr0, t, funnels, clamp, diag)
    ok1, b1 = _channel(7, -sf - tr1, t, funnels, clamp, diag)
    ok2, by = _channel(8, wrap_kernel(psi - psi_r), t, funnels, clamp, diag)
    if not (ok0 and ok1 and ok2) and not clamp:
        return STATUS_VIOLATION, _first_outside(diag, 6, 9)
    det_j = ct * cf * cf
    if abs(ct) < SINGULAR_TOL or abs(det_j) < SINGULAR_TOL:
        return STATUS_SINGULAR, -1
    # y = J^{-1} b with J = [[-st sf, ct cf], [-cf, 0]]
    y0 = -ct * cf * b1 / det_j
    y1 = (cf * b0 - st * sf * b1) / det_j
    # w = R_phitheta^{-1} y, R^{-1} = [[ct cp, -sp], [ct sp, cp]]
    w0 = ct * cp * y0 - sp * y1
    w1 = ct * sp * y0 + cp * y1
    tt = st / ct
    wr0 = -gains[6] * w0
    wr1 = -gains[7] * w1
    wr2 = -gains[8] * by - x[9] * cp * tt - x[10] * sp * tt
    diag[D_WR] = wr0
    diag[D_WR + 1] = wr1
    diag[D_WR + 2] = wr2
    # rate loop
    ok0, c0 = _channel(9, x[9] - wr0, t, funnels, clamp, diag)
    ok1, c1 = _channel(10, x[10] - wr1, t, funnels, clamp, diag)
    ok2, c2 = _channel(11, x[11] - wr2, t, funnels, clamp, diag)
    if not (ok0 and ok1 and ok2) and not clamp:
        return STATUS_VIOLATION, _first_outside(diag, 9, 12)
    cmd[1] = -gains[9] * c0
    cmd[2] = -gains[10] * c1
    cmd[3] = -gains[11] * c2
    return STATUS_OK, -1


@njit
def condition_flags_kernel(t, fz, tr0, tr1, funnels, flag_b, fz_min, out):
    out[0] = abs(fz) >= fz_min
    out[1] = flag_b
    r0 = rho_value(funnels[6, 0], funnels[6, 1], funnels[6, 2], t)
    r1 = rho_value(funnels[7, 0], funnels[7, 1], funnels[7, 2], t)
    out[2] = abs(tr0) <= r0 + 1.0 and abs(tr1) <= r1 + 1.0


def gain_ratio_condition(funnels: FunnelSet, gains: GainSet, cond: TheoremConditions) -> tuple[float, float, bool]:
    """(ratio, bound, ratio > bound) for the gain-ratio assumption."""
    ratio = min(gains.k_v_xy) / gains.k_v_z
    bound = max(funnels.tilt[0].rho0, funnels.tilt[1].rho0) / (4.0 * math.cos(cond.pi_bar) ** 2)
    return ratio, bound, ratio > bound


# ----------------------------------------------------------- per-loop API

def _scaled(e, pf: PerformanceFunction, t, channel):
    rho = evaluate(pf, t)
    xi = normalize(e, rho)
    eps = transform(xi, channel=channel, t=t)
    return transform_slope(xi, channel=channel, t=t) * eps / rho


def _pfs(funnels, group, n):
    if isinstance(funnels, FunnelSet):
        return getattr(funnels, group)
    if isinstance(funnels, PerformanceFunction):
        return (funnels,) * n
    seq = tuple(funnels)
    if len(seq) < n:
        raise ValueError(f"need {n} funnels, got {len(seq)}")
    return seq


def reference_velocity(e_p, funnels, gains, t) -> np.ndarray:
    e_p = np.asarray(e_p, dtype=float).reshape(3)
    k_p = gains.k_p if isinstance(gains, GainSet) else tuple(np.broadcast_to(gains, (3,)))
    pfs = _pfs(funnels, "pos", 3)
    return np.array([-k_p[i] * _scaled(e_p[i], pfs[i], t, CHANNELS[i]) for i in range(3)])


def thrust(e_vz, funnel, k_v_z, t) -> float:
    pf = funnel.vel[2] if isinstance(funnel, FunnelSet) else funnel
    return float(-k_v_z * _scaled(float(e_vz), pf, t, "v_z"))


def tilt_reference(e_v_xy, psi, F_z, funnels, k_v_xy, t, F_z_min: float = 1e-3) -> np.ndarray:
    if not abs(F_z) >= F_z_min:
        raise ThrustDegenerate(float(F_z), t=t)
    e = np.asarray(e_v_xy, dtype=float).reshape(2)
    pfs = _pfs(funnels, "vel", 2)
    k = np.broadcast_to(np.asarray(k_v_xy, dtype=float), (2,))
    a = np.array([_scaled(e[i], pfs[i], t, CHANNELS[3 + i]) for i in range(2)])
    c, s = math.cos(psi), math.sin(psi)
    h = np.array([c * a[0] + s * a[1], -s * a[0] + c * a[1]])
    return -k * h / F_z


def rate_reference(e_tilt, e_psi, eta, omega, funnels, gains, t) -> np.ndarray:
    phi, theta, psi = (float(v) for v in np.asarray(eta, dtype=float).reshape(3))
    omega = np.asarray(omega, dtype=float).reshape(3)
    e_tilt = np.asarray(e_tilt, dtype=float).reshape(2)
    tilt_pfs = _pfs(funnels, "tilt", 2)
    yaw_pf = funnels.yaw if isinstance(funnels, FunnelSet) else tuple(funnels)[2]
    b = np.array([_scaled(e_tilt[i], tilt_pfs[i], t, CHANNELS[6 + i]) for i in range(2)])
    by = _scaled(wrap_angle(float(e_psi)), yaw_pf, t, "psi")
    ct, st = math.cos(theta), math.sin(theta)
    cf, sf = math.cos(phi), math.sin(phi)
    if abs(ct) < SINGULAR_TOL or abs(ct * cf * cf) < SINGULAR_TOL:
        raise SingularityError(f"rate reference singular at phi={phi}, theta={theta}", t=t)
    jac = np.array([[-st * sf, ct * cf], [-cf, 0.0]])
    cp, sp = math.cos(psi), math.sin(psi)
    heading = np.array([[cp / ct, sp / ct], [-sp, cp]])
    w = np.linalg.solve(heading, np.linalg.solve(jac, b))
    k = np.asarray(gains.k_phitheta)
    tt = st / ct
    wy = -gains.k_psi * by - omega[0] * cp * tt - omega[1] * sp * tt
    return np.array([-k[0] * w[0], -k[1] * w[1], wy])


def torque(e_omega, funnels, k_omega, t) -> np.ndarray:
    e = np.asarray(e_omega, dtype=float).reshape(3)
    pfs = _pfs(funnels, "rate", 3)
    k = np.broadcast_to(np.asarray(k_omega, dtype=float), (3,))
    return np.array([-k[i] * _scaled(e[i], pfs[i], t, CHANNELS[9 + i]) for i in range(3)])


def check_conditions(diag: ControlDiagnostics, funnels: FunnelSet, gains: GainSet,
                     cond: TheoremConditions, t: float) -> tuple[bool, bool, bool]:
    flag_a = bool(abs(diag.F_z) >= cond.F_z_min)
    flag_b = gain_ratio_condition(funnels, gains, cond)[2]
    tr = np.asarray(diag.T_tilt_r, dtype=float)
    flag_c = bool(all(abs(tr[i]) <= evaluate(funnels.tilt[i], t) + 1.0 for i in range(2)))
    return flag_a, flag_b, flag_c


def compute_control(t: float, state: VehicleState, ref: ReferenceSample, funnels: FunnelSet,
                    gains: GainSet, cond: TheoremConditions):
    """Full cascade at one instant.  Errors carry the loop stage and channel that failed."""
    x = state.as_array() if isinstance(state, VehicleState) else np.array(state, dtype=float).reshape(12)
    cmd = np.empty(4)
    diag = np.empty(D_SIZE)
    p_r = np.asarray(ref.p_r, dtype=float)
    status, ch = control_kernel(float(t), x, p_r[0], p_r[1], p_r[2], float(ref.psi_r),
                                funnels.as_array(), gains.as_array(), cond.F_z_min, False, cmd, diag)
    raise_for_status(status, ch, t, diag, cmd)
    d = ControlDiagnostics.from_buffer(diag, cmd[0])
    flags = check_conditions(d, funnels, gains, cond, t)
    d = ControlDiagnostics.from_buffer(diag, cmd[0], flags)
    return ControlCommand(float(cmd[0]), cmd[1:4].copy()), d


def raise_for_status(status, ch, t, diag, cmd, report=None):
    if status == STATUS_OK:
        return
    if status == STATUS_VIOLATION:
        raise FunnelViolation(channel=CHANNELS[ch], t=float(t), xi=float(diag[D_XI + ch]),
                              stage=CHANNEL_STAGE[ch], report=report)
    if status == STATUS_THRUST:
        raise ThrustDegenerate(float(cmd[0]), t=float(t), report=report)
    raise SingularityError(f"attitude singular at t={float(t):.6g}", t=float(t), report=report)
