"""JSON scenario files: strict loading, dumping and the bundled presets."""
from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .controller import GainSet, TheoremConditions
from .errors import ConfigError
from .funnel import CHANNELS, FunnelSet, PerformanceFunction
from .plant import DISTURBANCE_KINDS, DisturbanceSpec, QuadParams, VehicleState
from .sim import HOLD_MODES, VIOLATION_MODES, SimConfig
from .trajectories import TRAJECTORY_NAMES, TrajectoryKind

PRESETS = ("ascent", "landing")

TOP_KEYS = {"scenario", "duration", "dt", "integrator", "violation_mode", "initial_state", "params",
            "disturbance", "funnels", "gains", "conditions", "outputs"}
REQUIRED_KEYS = {"scenario", "duration", "dt", "funnels"}
OUTPUT_KEYS = {"plot_channels"}


def _fail(key, msg):
    raise ConfigError(f"{key}: {msg}")


def _section(obj, key, allowed, required=()):
    if not isinstance(obj, dict):
        _fail(key, f"expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        _fail(key, f"unknown key(s) {', '.join(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        _fail(key, f"missing key(s) {', '.join(missing)}")
    return obj


def _number(obj, key, path, positive=False, nonneg=False):
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        _fail(f"{path}.{key}", f"expected a finite number, got {val!r}")
    if positive and not val > 0:
        _fail(f"{path}.{key}", f"must be positive, got {val}")
    if nonneg and not val >= 0:
        _fail(f"{path}.{key}", f"must be nonnegative, got {val}")
    return float(val)


def _vector(obj, key, path, n, positive=False):
    val = obj[key]
    if not isinstance(val, list) or len(val) != n:
        _fail(f"{path}.{key}", f"expected a list of {n} numbers, got {val!r}")
    out = []
    for i, v in enumerate(val):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            _fail(f"{path}.{key}[{i}]", f"expected a finite number, got {v!r}")
        if positive and not v > 0:
            _fail(f"{path}.{key}[{i}]", f"must be positive, got {v}")
        out.append(float(v))
    return out


def _wrap(key, fn, *args, **kwargs):
    """Re-raise constructor ValueErrors as ConfigError naming the section."""
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        _fail(key, str(exc))


def _scenario(obj):
    sec = _section(obj, "scenario", {"kind", "z_d", "t_d", "p", "psi"}, ("kind",))
    kind = sec["kind"]
    if kind not in TRAJECTORY_NAMES:
        _fail("scenario.kind", f"expected one of {TRAJECTORY_NAMES}, got {kind!r}")
    kw: dict[str, Any] = {"name": kind}
    for k in ("z_d", "t_d"):
        if k in sec:
            kw[k] = _number(sec, k, "scenario", positive=True)
    if "p" in sec:
        kw["p"] = tuple(_vector(sec, "p", "scenario", 3))
    if "psi" in sec:
        kw["psi"] = _number(sec, "psi", "scenario")
    return _wrap("scenario", TrajectoryKind, **kw)


def _initial_state(obj):
    sec = _section(obj, "initial_state", {"p", "v", "eta", "omega"})
    vals = {k: _vector(sec, k, "initial_state", 3) if k in sec else [0.0] * 3
            for k in ("p", "v", "eta", "omega")}
    return _wrap("initial_state", VehicleState, **vals)


def _params(obj):
    sec = _section(obj, "params", {"m", "inertia_diag", "g"})
    kw = {}
    if "m" in sec:
        kw["m"] = _number(sec, "m", "params", positive=True)
    if "inertia_diag" in sec:
        kw["inertia_diag"] = _vector(sec, "inertia_diag", "params", 3, positive=True)
    if "g" in sec:
        kw["g"] = _number(sec, "g", "params", nonneg=True)
    return _wrap("params", QuadParams, **kw)


def _disturbance(obj):
    sec = _section(obj, "disturbance", {"kind", "force_params", "torque_params", "frequency"}, ("kind",))
    if sec["kind"] not in DISTURBANCE_KINDS:
        _fail("disturbance.kind", f"expected one of {DISTURBANCE_KINDS}, got {sec['kind']!r}")
    kw = {"kind": sec["kind"]}
    for k in ("force_params", "torque_params"):
        if k in sec:
            kw[k] = _vector(sec, k, "disturbance", 3)
    if "frequency" in sec:
        kw["frequency"] = _number(sec, "frequency", "disturbance", nonneg=True)
    return _wrap("disturbance", DisturbanceSpec, **kw)


def _funnels(obj):
    sec = _section(obj, "funnels", set(CHANNELS))
    missing = [ch for ch in CHANNELS if ch not in sec]
    if missing:
        _fail("funnels", f"missing funnel for channel(s) {', '.join(missing)}")
    out = {}
    for ch in CHANNELS:
        entry = _section(sec[ch], f"funnels.{ch}", {"rho0", "rho_inf", "l"}, ("rho0", "rho_inf", "l"))
        vals = [_number(entry, k, f"funnels.{ch}", positive=True) for k in ("rho0", "rho_inf", "l")]
        out[ch] = _wrap(f"funnels.{ch}", PerformanceFunction, *vals)
    return FunnelSet.from_channels(out)


def _gains(obj):
    shape = {"k_p": 3, "k_v_xy": 2, "k_v_z": 0, "k_phitheta": 2, "k_psi": 0, "k_omega": 3}
    sec = _section(obj, "gains", set(shape))
    kw = {}
    for k, n in shape.items():
        if k in sec:
            kw[k] = (_number(sec, k, "gains", positive=True) if n == 0
                     else tuple(_vector(sec, k, "gains", n, positive=True)))
    return _wrap("gains", GainSet, **kw)


def _conditions(obj):
    sec = _section(obj, "conditions", {"pi_bar", "F_z_min"})
    kw = {k: _number(sec, k, "conditions", positive=True) for k in ("pi_bar", "F_z_min") if k in sec}
    return _wrap("conditions", TheoremConditions, **kw)


def _integrator(obj):
    sec = _section(obj, "integrator", {"substeps", "hold"})
    kw = {}
    if "substeps" in sec:
        val = sec["substeps"]
        if isinstance(val, bool) or not isinstance(val, int) or val < 1:
            _fail("integrator.substeps", f"expected a positive integer, got {val!r}")
        kw["substeps"] = val
    if "hold" in sec:
        if sec["hold"] not in HOLD_MODES:
            _fail("integrator.hold", f"expected one of {HOLD_MODES}, got {sec['hold']!r}")
        kw["hold"] = sec["hold"]
    return kw


def parse_config(data: dict, overrides: dict | None = None) -> tuple[SimConfig, dict]:
    """Validate a decoded scenario document.  Returns (config, outputs section).

    ``overrides`` replaces top-level scalar entries (duration, dt) before
    validation so command-line values get the same checks.
    """
    data = dict(_section(data, "<root>", TOP_KEYS, tuple(sorted(REQUIRED_KEYS))))
    for k, v in (overrides or {}).items():
        data[k] = v
    kw: dict[str, Any] = {
        "scenario": _scenario(data["scenario"]),
        "duration": _number(data, "duration", "<root>", positive=True),
        "dt": _number(data, "dt", "<root>", positive=True),
        "funnels": _funnels(data["funnels"]),
    }
    if "integrator" in data:
        kw.update(_integrator(data["integrator"]))
    if "violation_mode" in data:
        if data["violation_mode"] not in VIOLATION_MODES:
            _fail("violation_mode", f"expected one of {VIOLATION_MODES}, got {data['violation_mode']!r}")
        kw["violation_mode"] = data["violation_mode"]
    for key, fn in (("initial_state", _initial_state), ("params", _params), ("disturbance", _disturbance),
                    ("gains", _gains), ("conditions", _conditions)):
        if key in data:
            kw[key] = fn(data[key])
    outputs = _section(data.get("outputs", {}), "outputs", OUTPUT_KEYS)
    if "plot_channels" in outputs:
        chans = outputs["plot_channels"]
        if not isinstance(chans, list) or any(c not in CHANNELS for c in chans):
            _fail("outputs.plot_channels", f"expected a list of channel names from {CHANNELS}")
    return SimConfig(**kw), dict(outputs)


def _decode(text: str, source: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_config(path, overrides: dict | None = None) -> SimConfig:
    """Load and validate a scenario file.  ``path`` may also name a bundled preset."""
    return load_config_with_outputs(path, overrides)[0]


def load_config_with_outputs(path, overrides: dict | None = None) -> tuple[SimConfig, dict]:
    text, source = read_config_text(path)
    try:
        return parse_config(_decode(text, source), overrides)
    except ConfigError as exc:
        if str(exc).startswith(source):
            raise
        raise ConfigError(f"{source}: {exc}") from None


def read_config_text(path) -> tuple[str, str]:
    p = Path(path)
    if p.is_file():
        return p.read_text(encoding="utf-8"), str(p)
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    if p.parent == Path(".") and name in PRESETS:
        return preset_text(name), f"preset:{name}"
    raise ConfigError(f"{path}: no such file or bundled preset")


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS}")
    return resources.files("funnelquad").joinpath("presets", f"{name}.json").read_text(encoding="utf-8")


def load_preset(name: str) -> SimConfig:
    return parse_config(_decode(preset_text(name), f"preset:{name}"))[0]


def _list(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=float).reshape(-1)]


def dump_config(cfg: SimConfig, outputs: dict | None = None) -> dict:
    """Scenario document that load_config turns back into an equivalent SimConfig."""
    sc = cfg.scenario
    scenario: dict[str, Any] = {"kind": sc.name}
    if sc.name == "landing":
        scenario.update(z_d=sc.z_d, t_d=sc.t_d)
    elif sc.name == "hover":
        scenario.update(p=list(sc.p), psi=sc.psi)
    s, p, d, g, c = cfg.initial_state, cfg.params, cfg.disturbance, cfg.gains, cfg.conditions
    doc = {
        "scenario": scenario,
        "duration": cfg.duration,
        "dt": cfg.dt,
        "integrator": {"substeps": cfg.substeps, "hold": cfg.hold},
        "violation_mode": cfg.violation_mode,
        "initial_state": {"p": _list(s.p), "v": _list(s.v), "eta": _list(s.eta), "omega": _list(s.omega)},
        "params": {"m": p.m, "inertia_diag": _list(p.inertia_diag), "g": p.g},
        "disturbance": {"kind": d.kind, "force_params": _list(d.force_params),
                        "torque_params": _list(d.torque_params), "frequency": d.frequency},
        "funnels": {ch: {"rho0": pf.rho0, "rho_inf": pf.rho_inf, "l": pf.l}
                    for ch, pf in zip(CHANNELS, cfg.funnels.channels())},
        "gains": {"k_p": list(g.k_p), "k_v_xy": list(g.k_v_xy), "k_v_z": g.k_v_z,
                  "k_phitheta": list(g.k_phitheta), "k_psi": g.k_psi, "k_omega": list(g.k_omega)},
        "conditions": {"pi_bar": c.pi_bar, "F_z_min": c.F_z_min},
    }
    if outputs:
        doc["outputs"] = dict(outputs)
    return doc


def save_config(cfg: SimConfig, path, outputs: dict | None = None) -> None:
    Path(path).write_text(json.dumps(dump_config(cfg, outputs), indent=2) + "\n", encoding="utf-8")
