"""Fixed-step closed-loop simulation with funnel and assumption monitoring."""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from ._jit import njit
from .attitude import tilt_to_angles_kernel, wrap_angle, wrap_kernel
from .controller import (D_E, D_EPS, D_RHO, D_SIZE, D_TR, D_VR, D_WR, D_XI,
                         STATUS_OK, STATUS_SINGULAR, STATUS_THRUST, STATUS_VIOLATION,
                         ControlDiagnostics, GainSet, ReferenceSample, TheoremConditions,
                         condition_flags_kernel, control_kernel, gain_ratio_condition,
                         raise_for_status)
from .errors import (ConfigError, FunnelViolation, InitialComplianceError,
                     NonFiniteStateError, SingularityError, ThrustDegenerate)
from .funnel import CHANNEL_STAGE, CHANNELS, FunnelSet
from .plant import ControlCommand, DisturbanceSpec, QuadParams, VehicleState, rhs_kernel
from .trajectories import BOAT_HORIZON, TrajectoryKind, reference_kernel

STATUS_NONFINITE = 4
STATUS_NAMES = {
    STATUS_OK: "ok",
    STATUS_VIOLATION: "funnel_violation",
    STATUS_THRUST: "thrust_degenerate",
    STATUS_SINGULAR: "singular",
    STATUS_NONFINITE: "non_finite",
}
VIOLATION_MODES = ("halt", "clamp_and_continue")
HOLD_MODES = ("zoh", "continuous")
MAX_DT = 0.01
# Violations stored individually; the total count is always exact.
VIOLATION_CAPACITY = 100_000
STEADY_STATE_FRACTION = 0.25


@dataclass(frozen=True, eq=False)
class SimConfig:
    """One closed-loop run.

    ``dt`` is the controller/telemetry period.  Each period is split into
    ``substeps`` RK4 steps; the command is recomputed at every internal step
    (zero-order hold) or at every RK stage when ``hold == "continuous"``.
    """
    funnels: FunnelSet
    dt: float = 1e-3
    duration: float = 20.0
    scenario: TrajectoryKind = field(default_factory=TrajectoryKind)
    initial_state: VehicleState = field(default_factory=VehicleState.zero)
    params: QuadParams = field(default_factory=QuadParams)
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    gains: GainSet = field(default_factory=GainSet)
    conditions: TheoremConditions = field(default_factory=TheoremConditions)
    violation_mode: str = "halt"
    substeps: int = 1
    hold: str = "zoh"

    def __post_init__(self):
        for name in ("dt", "duration"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be a positive number, got {val!r}")
        if self.dt > self.duration:
            raise ConfigError(f"dt={self.dt} exceeds duration={self.duration}")
        if self.dt > MAX_DT:
            raise ConfigError(f"dt={self.dt} exceeds the stiffness guard {MAX_DT}")
        if self.violation_mode not in VIOLATION_MODES:
            raise ConfigError(f"violation_mode must be one of {VIOLATION_MODES}, got {self.violation_mode!r}")
        if self.hold not in HOLD_MODES:
            raise ConfigError(f"hold must be one of {HOLD_MODES}, got {self.hold!r}")
        if isinstance(self.substeps, bool) or not isinstance(self.substeps, int) or self.substeps < 1:
            raise ConfigError(f"substeps must be a positive integer, got {self.substeps!r}")
        if self.scenario.name == "landing" and self.duration > BOAT_HORIZON:
            raise ConfigError(f"landing runs are limited to {BOAT_HORIZON} s, got duration={self.duration}")
        if not isinstance(self.funnels, FunnelSet):
            raise ConfigError("funnels must be a FunnelSet")

    @property
    def n_records(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9)) + 1

    def replace(self, **changes) -> "SimConfig":
        from dataclasses import replace
        return replace(self, **changes)


class Violation(NamedTuple):
    t: float
    channel: str
    xi: float


@dataclass(frozen=True, eq=False)
class SimRecord:
    t: float
    state: VehicleState
    command: ControlCommand
    diagnostics: ControlDiagnostics
    funnel_values: np.ndarray
    errors_raw: np.ndarray
    reference: ReferenceSample


class RecordView(Sequence):
    """Lazy sequence of SimRecord built from the columnar report arrays."""

    def __init__(self, report: "RunReport"):
        self._r = report

    def __len__(self):
        return len(self._r.t)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        r = self._r
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        cmd = r.command[i]
        diag = ControlDiagnostics.from_buffer(r.diag[i], cmd[0], r.flags[i])
        return SimRecord(
            t=float(r.t[i]),
            state=VehicleState.from_array(r.x[i]),
            command=ControlCommand(cmd[0], cmd[1:4]),
            diagnostics=diag,
            funnel_values=r.rho[i].copy(),
            errors_raw=r.e[i].copy(),
            reference=ReferenceSample(p_r=r.ref[i, :3], psi_r=r.ref[i, 3]),
        )


@dataclass(eq=False)
class RunReport:
    config: SimConfig
    t: np.ndarray
    x: np.ndarray
    command: np.ndarray
    diag: np.ndarray
    ref: np.ndarray
    flags: np.ndarray
    violations: list
    violation_count: int
    max_abs_xi: np.ndarray
    assumption1_ok: bool
    assumption1_count: int
    status: str = "ok"
    failure: dict | None = None

    @property
    def records(self) -> RecordView:
        return RecordView(self)

    @property
    def condition_flag_history(self) -> np.ndarray:
        return self.flags

    @property
    def e(self) -> np.ndarray:
        return self.diag[:, D_E:D_E + 12]

    @property
    def rho(self) -> np.ndarray:
        return self.diag[:, D_RHO:D_RHO + 12]

    @property
    def xi(self) -> np.ndarray:
        return self.diag[:, D_XI:D_XI + 12]

    @property
    def eps(self) -> np.ndarray:
        return self.diag[:, D_EPS:D_EPS + 12]

    @property
    def v_r(self) -> np.ndarray:
        return self.diag[:, D_VR:D_VR + 3]

    @property
    def T_r(self) -> np.ndarray:
        return self.diag[:, D_TR:D_TR + 2]

    @property
    def omega_r(self) -> np.ndarray:
        return self.diag[:, D_WR:D_WR + 3]

    @property
    def metrics(self) -> "Metrics":
        return metrics(self)

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class InitialCheck:
    xi0: np.ndarray
    condition_flags: tuple


# ---------------------------------------------------------------- kernels

@njit
def _evaluate(t, x, ref_code, ref_params, funnels, gains, fz_min, clamp, cmd, diag, refbuf):
    px, py, pz, psr = reference_kernel(ref_code, ref_params, t)
    refbuf[0] = px
    refbuf[1] = py
    refbuf[2] = pz
    refbuf[3] = psr
    return control_kernel(t, x, px, py, pz, psr, funnels, gains, fz_min, clamp, cmd, diag)


@njit
def _monitor(t, diag, max_xi, viol_t, viol_ch, viol_xi, n_viol):
    for i in range(12):
        a = abs(diag[D_XI + i])
        if a > max_xi[i]:
            max_xi[i] = a
        if not a < 1.0 and not math.isnan(diag[D_XI + i]):
            if n_viol < viol_t.shape[0]:
                viol_t[n_viol] = t
                viol_ch[n_viol] = i
                viol_xi[n_viol] = diag[D_XI + i]
            n_viol += 1
    return n_viol


@njit
def _stage(t, x, hold, ref_code, ref_params, funnels, gains, fz_min, clamp,
           cmd, scmd, sdiag, sref, max_xi, viol_t, viol_ch, viol_xi, n_viol):
    """Command for one RK stage: the held command or a fresh evaluation."""
    if hold == 0:
        for i in range(4):
            scmd[i] = cmd[i]
        return STATUS_OK, -1, n_viol
    status, ch = _evaluate(t, x, ref_code, ref_params, funnels, gains, fz_min, clamp, scmd, sdiag, sref)
    n_viol = _monitor(t, sdiag, max_xi, viol_t, viol_ch, viol_xi, n_viol)
    return status, ch, n_viol


@njit
def _finite(x):
    for i in range(x.shape[0]):
        if not math.isfinite(x[i]):
            return False
    return True


@njit
def closed_loop_kernel(x0, n_rec, dt, substeps, hold, ref_code, ref_params,
                       m, inertia, g, dist_kind, fp, tp, freq,
                       funnels, gains, fz_min, flag_b, pi_bar, clamp,
                       rec_x, rec_cmd, rec_diag, rec_ref, rec_flags,
                       viol_t, viol_ch, viol_xi, max_xi, fail_x, fail_diag, fail_cmd):
    """Integrate the closed loop, filling the record arrays row by row.

    Returns (status, channel, t_fail, n_written, n_viol, n_assumption).
    """
    h = dt / substeps
    half_pi = 0.5 * math.pi
    x = x0.copy()
    xt = np.empty(12)
    k1 = np.empty(12)
    k2 = np.empty(12)
    k3 = np.empty(12)
    k4 = np.empty(12)
    cmd = np.empty(4)
    scmd = np.empty(4)
    diag = np.empty(D_SIZE)
    sdiag = np.empty(D_SIZE)
    refbuf = np.empty(4)
    sref = np.empty(4)
    dist = np.empty(6)
    flags = np.empty(3, dtype=np.bool_)
    n_viol = 0
    n_assume = 0
    for k in range(n_rec):
        for s in range(substeps):
            t = k * dt + s * h
            status, ch = _evaluate(t, x, ref_code, ref_params, funnels, gains, fz_min, clamp, cmd, diag, refbuf)
            n_viol = _monitor(t, diag, max_xi, viol_t, viol_ch, viol_xi, n_viol)
            if s == 0:
                condition_flags_kernel(t, cmd[0], diag[D_TR], diag[D_TR + 1], funnels, flag_b, fz_min, flags)
                for i in range(12):
                    rec_x[k, i] = x[i]
                for i in range(4):
                    rec_cmd[k, i] = cmd[i]
                    rec_ref[k, i] = refbuf[i]
                for i in range(D_SIZE):
                    rec_diag[k, i] = diag[i]
                for i in range(3):
                    rec_flags[k, i] = flags[i]
            if status != STATUS_OK:
                fail_x[:] = x
                fail_diag[:] = diag
                fail_cmd[:] = cmd
                return status, ch, t, k + 1, n_viol, n_assume
            if k == n_rec - 1:
                break
            # classical RK4 over one internal step
            status, ch, n_viol = _stage(t, x, hold, ref_code, ref_params, funnels, gains, fz_min, clamp,
                                        cmd, scmd, sdiag, sref, max_xi, viol_t, viol_ch, viol_xi, n_viol)
            if status == STATUS_OK and not rhs_kernel(t, x, scmd[0], scmd[1], scmd[2], scmd[3], m, inertia, g,
                                                      dist_kind, fp, tp, freq, dist, k1):
                status = STATUS_SINGULAR
            ts = t
            if status == STATUS_OK:
                ts = t + 0.5 * h
                for i in range(12):
                    xt[i] = x[i] + 0.5 * h * k1[i]
                status, ch, n_viol = _stage(ts, xt, hold, ref_code, ref_params, funnels, gains, fz_min, clamp,
                                            cmd, scmd, sdiag, sref, max_xi, viol_t, viol_ch, viol_xi, n_viol)
                if status == STATUS_OK and not rhs_kernel(ts, xt, scmd[0], scmd[1], scmd[2], scmd[3], m, inertia,
                                                          g, dist_kind, fp, tp, freq, dist, k2):
                    status = STATUS_SINGULAR
            if status == STATUS_OK:
                for i in range(12):
                    xt[i] = x[i] + 0.5 * h * k2[i]
                status, ch, n_viol = _stage(ts, xt, hold, ref_code, ref_params, funnels, gains, fz_min, clamp,
                                            cmd, scmd, sdiag, sref, max_xi, viol_t, viol_ch, viol_xi, n_viol)
                if status == STATUS_OK and not rhs_kernel(ts, xt, scmd[0], scmd[1], scmd[2], scmd[3], m, inertia,
                                                          g, dist_kind, fp, tp, freq, dist, k3):
                    status = STATUS_SINGULAR
            if status == STATUS_OK:
                ts = t + h
                for i in range(12):
                    xt[i] = x[i] + h * k3[i]
                status, ch, n_viol = _stage(ts, xt, hold, ref_code, ref_params, funnels, gains, fz_min, clamp,
                                            cmd, scmd, sdiag, sref, max_xi, viol_t, viol_ch, viol_xi, n_viol)
                if status == STATUS_OK and not rhs_kernel(ts, xt, scmd[0], scmd[1], scmd[2], scmd[3], m, inertia,
                                                          g, dist_kind, fp, tp, freq, dist, k4):
                    status = STATUS_SINGULAR
            if status != STATUS_OK:
                fail_x[:] = xt
                fail_diag[:] = sdiag if hold == 1 else diag
                fail_cmd[:] = scmd
                return status, ch, ts, k + 1, n_viol, n_assume
            for i in range(12):
                x[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            x[8] = wrap_kernel(x[8])
            t_next = t + h
            if not _finite(x):
                fail_x[:] = x
                return STATUS_NONFINITE, -1, t_next, k + 1, n_viol, n_assume
            if not (abs(x[6]) < half_pi and abs(x[7]) < half_pi):
                fail_x[:] = x
                return STATUS_SINGULAR, -1, t_next, k + 1, n_viol, n_assume
            if abs(x[6]) > pi_bar or abs(x[7]) > pi_bar:
                n_assume += 1
    return STATUS_OK, -1, (n_rec - 1) * dt, n_rec, n_viol, n_assume


# ------------------------------------------------------------ public API

def rk4_step(rhs: Callable, state, t: float, dt: float, wrap_yaw: bool | None = None):
    """One classical RK4 step of x' = rhs(t, x).

    VehicleState inputs (or ``wrap_yaw=True`` with a 12-vector) get the yaw
    entry re-wrapped to (-pi, pi] afterwards.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    is_state = isinstance(state, VehicleState)
    x = state.as_array() if is_state else np.asarray(state, dtype=float)
    k1 = np.asarray(rhs(t, x), dtype=float)
    k2 = np.asarray(rhs(t + dt / 2, x + dt / 2 * k1), dtype=float)
    k3 = np.asarray(rhs(t + dt / 2, x + dt / 2 * k2), dtype=float)
    k4 = np.asarray(rhs(t + dt, x + dt * k3), dtype=float)
    out = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if is_state:
        return VehicleState.from_array(out)
    if wrap_yaw:
        out = np.array(out, dtype=float)
        out[8] = wrap_angle(out[8])
    return out if out.ndim else float(out)


def _kernel_inputs(cfg: SimConfig):
    return dict(
        ref_code=cfg.scenario.code, ref_params=cfg.scenario.params,
        funnels=cfg.funnels.as_array(), gains=cfg.gains.as_array(),
        fz_min=cfg.conditions.F_z_min,
    )


def validate_initial(cfg: SimConfig) -> InitialCheck:
    """Evaluate the cascade once at t=0 and require every channel inside its funnel."""
    k = _kernel_inputs(cfg)
    x0 = cfg.initial_state.as_array()
    cmd = np.empty(4)
    diag = np.empty(D_SIZE)
    refbuf = np.empty(4)
    status, ch = _evaluate(0.0, x0, k["ref_code"], k["ref_params"], k["funnels"], k["gains"],
                           k["fz_min"], False, cmd, diag, refbuf)
    if status == STATUS_VIOLATION:
        lo = 3 * (ch // 3)
        bad = [(CHANNELS[i], float(diag[D_XI + i])) for i in range(lo, lo + 3)
               if not abs(diag[D_XI + i]) < 1.0]
        raise InitialComplianceError(bad)
    raise_for_status(status, ch, 0.0, diag, cmd)
    flags = np.empty(3, dtype=np.bool_)
    flag_b = gain_ratio_condition(cfg.funnels, cfg.gains, cfg.conditions)[2]
    condition_flags_kernel(0.0, cmd[0], diag[D_TR], diag[D_TR + 1], k["funnels"], flag_b,
                           k["fz_min"], flags)
    return InitialCheck(xi0=diag[D_XI:D_XI + 12].copy(), condition_flags=tuple(bool(f) for f in flags))


def run(cfg: SimConfig) -> RunReport:
    """Simulate the closed loop.  Raises with the partial report attached on failure."""
    validate_initial(cfg)
    n = cfg.n_records
    k = _kernel_inputs(cfg)
    clamp = cfg.violation_mode == "clamp_and_continue"
    flag_b = gain_ratio_condition(cfg.funnels, cfg.gains, cfg.conditions)[2]
    rec_x = np.full((n, 12), np.nan)
    rec_cmd = np.full((n, 4), np.nan)
    rec_diag = np.full((n, D_SIZE), np.nan)
    rec_ref = np.full((n, 4), np.nan)
    rec_flags = np.zeros((n, 3), dtype=np.bool_)
    viol_t = np.empty(VIOLATION_CAPACITY)
    viol_ch = np.empty(VIOLATION_CAPACITY, dtype=np.int64)
    viol_xi = np.empty(VIOLATION_CAPACITY)
    max_xi = np.zeros(12)
    fail_x = np.full(12, np.nan)
    fail_diag = np.full(D_SIZE, np.nan)
    fail_cmd = np.full(4, np.nan)
    p, d = cfg.params, cfg.disturbance
    status, ch, t_fail, n_written, n_viol, n_assume = closed_loop_kernel(
        cfg.initial_state.as_array(), n, float(cfg.dt), int(cfg.substeps),
        0 if cfg.hold == "zoh" else 1, k["ref_code"], k["ref_params"],
        float(p.m), np.array(p.inertia_diag), float(p.g), d.code,
        np.array(d.force_params), np.array(d.torque_params), float(d.frequency),
        k["funnels"], k["gains"], k["fz_min"], flag_b, float(cfg.conditions.pi_bar), clamp,
        rec_x, rec_cmd, rec_diag, rec_ref, rec_flags,
        viol_t, viol_ch, viol_xi, max_xi, fail_x, fail_diag, fail_cmd)
    stored = min(n_viol, VIOLATION_CAPACITY)
    violations = [Violation(float(viol_t[i]), CHANNELS[viol_ch[i]], float(viol_xi[i])) for i in range(stored)]
    failure = None
    if status != STATUS_OK:
        failure = {
            "status": STATUS_NAMES[status],
            "t": float(t_fail),
            "channel": CHANNELS[ch] if ch >= 0 else None,
            "stage": CHANNEL_STAGE[ch] if ch >= 0 else None,
            "xi": float(fail_diag[D_XI + ch]) if ch >= 0 else None,
            "state": fail_x.copy(),
            "xi_all": fail_diag[D_XI:D_XI + 12].copy(),
        }
    report = RunReport(
        config=cfg,
        t=np.arange(n_written) * cfg.dt,
        x=rec_x[:n_written], command=rec_cmd[:n_written], diag=rec_diag[:n_written],
        ref=rec_ref[:n_written], flags=rec_flags[:n_written],
        violations=violations, violation_count=int(n_viol), max_abs_xi=max_xi,
        assumption1_ok=n_assume == 0, assumption1_count=int(n_assume),
        status=STATUS_NAMES[status], failure=failure,
    )
    if status == STATUS_VIOLATION:
        raise FunnelViolation(channel=failure["channel"], t=failure["t"], xi=failure["xi"],
                              stage=failure["stage"], report=report)
    if status == STATUS_THRUST:
        raise ThrustDegenerate(float(fail_cmd[0]), t=float(t_fail), report=report)
    if status == STATUS_SINGULAR:
        raise SingularityError(f"attitude singular or out of domain at t={t_fail:.6g}", t=float(t_fail),
                               report=report)
    if status == STATUS_NONFINITE:
        raise NonFiniteStateError(float(t_fail), report=report)
    return report


@dataclass(frozen=True)
class Metrics:
    channels: tuple
    max_abs_xi: np.ndarray
    max_abs_xi_logged: np.ndarray
    max_abs_e: np.ndarray
    steady_state_max_abs_e: np.ndarray
    steady_state_window: tuple
    condition_false_counts: tuple
    violation_count: int
    assumption1_ok: bool

    def to_dict(self) -> dict:
        per = {ch: {
            "max_abs_xi": float(self.max_abs_xi[i]),
            "max_abs_xi_logged": float(self.max_abs_xi_logged[i]),
            "max_abs_e": float(self.max_abs_e[i]),
            "steady_state_max_abs_e": float(self.steady_state_max_abs_e[i]),
        } for i, ch in enumerate(self.channels)}
        return {
            "channels": per,
            "steady_state_window": list(self.steady_state_window),
            "condition_false_counts": dict(zip(("cond_a", "cond_b", "cond_c"), self.condition_false_counts)),
            "violation_count": self.violation_count,
            "assumption1_ok": self.assumption1_ok,
        }


def metrics(report: RunReport) -> Metrics:
    if len(report.t) == 0:
        raise ValueError("metrics need a non-empty report")
    t = report.t
    start = t[-1] - STEADY_STATE_FRACTION * (t[-1] - t[0])
    window = t >= start - 1e-12
    abs_e = np.abs(report.e)
    with np.errstate(invalid="ignore"):
        logged = np.nanmax(np.abs(report.xi), axis=0, initial=0.0)
        max_e = np.nanmax(abs_e, axis=0, initial=0.0)
        ss = np.nanmax(abs_e[window], axis=0, initial=0.0)
    falses = tuple(int(np.count_nonzero(~report.flags[:, j])) for j in range(3))
    return Metrics(
        channels=CHANNELS,
        max_abs_xi=np.maximum(report.max_abs_xi, logged),
        max_abs_xi_logged=logged,
        max_abs_e=max_e,
        steady_state_max_abs_e=ss,
        steady_state_window=(float(start), float(t[-1])),
        condition_false_counts=falses,
        violation_count=report.violation_count,
        assumption1_ok=report.assumption1_ok,
    )


def reference_angles(report: RunReport) -> np.ndarray:
    """(phi_r, theta_r) per record from the tilt reference; NaN where not invertible."""
    out = np.full((len(report.t), 2), np.nan)
    for i, (a, b) in enumerate(report.T_r):
        out[i] = tilt_to_angles_kernel(a, b)
    return out
