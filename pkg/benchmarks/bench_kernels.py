"""Compare the compiled kernels with the pure-Python fallback.

Each path runs in its own interpreter because the switch is read at import
time.  Reported numbers are per-call medians for the controller and the
dynamics, and wall time for a short closed-loop run of the ascent preset.
Compiled per-call figures are mostly the Python-to-native dispatch cost;
the closed-loop row is the one that reflects kernel speed.

    python3 benchmarks/bench_kernels.py --duration 0.05 --repeat 5
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, statistics, sys, time
import numpy as np
from funnelquad import load_preset, run
from funnelquad._jit import JIT_ENABLED
from funnelquad.controller import D_SIZE, control_kernel
from funnelquad.plant import rhs_kernel

duration, repeat, calls = float(sys.argv[1]), int(sys.argv[2]), int(sys.argv[3])
cfg = load_preset("ascent")
funnels, gains = cfg.funnels.as_array(), cfg.gains.as_array()
x = np.zeros(12); x[0] = 0.2; x[5] = -0.3
cmd, diag = np.empty(4), np.empty(D_SIZE)
inertia, fp, tp = np.array([0.01, 0.01, 0.02]), np.zeros(3), np.zeros(3)
dist, dx = np.empty(6), np.empty(12)

def per_call(fn):
    fn()
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(calls):
            fn()
        samples.append((time.perf_counter() - t0) / calls)
    return statistics.median(samples)

t0 = time.perf_counter()
run(cfg.replace(duration=cfg.dt))
warmup = time.perf_counter() - t0
ctrl = per_call(lambda: control_kernel(0.1, x, 0.0, 0.0, 0.0, 0.0, funnels, gains, 1e-3, False, cmd, diag))
rhs = per_call(lambda: rhs_kernel(0.1, x, 9.81, 0.0, 0.0, 0.0, 1.0, inertia, 9.81, 0, fp, tp, 0.0, dist, dx))
loop = []
for _ in range(repeat):
    t0 = time.perf_counter()
    run(cfg.replace(duration=duration))
    loop.append(time.perf_counter() - t0)
print(json.dumps({"jit": JIT_ENABLED, "warmup": warmup, "control": ctrl, "rhs": rhs,
                  "loop": statistics.median(loop)}))
"""


def measure(jit: bool, duration: float, repeat: int, calls: int) -> dict:
    env = dict(os.environ)
    env.pop("FUNNELQUAD_DISABLE_JIT", None)
    if not jit:
        env["FUNNELQUAD_DISABLE_JIT"] = "1"
    out = subprocess.run([sys.executable, "-c", WORKER, str(duration), str(repeat), str(calls)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=0.05, help="simulated seconds for the loop timing")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--calls", type=int, default=2000, help="kernel calls per timing sample")
    args = ap.parse_args(argv)

    fast = measure(True, args.duration, args.repeat, args.calls)
    slow = measure(False, args.duration, args.repeat, args.calls)
    steps = round(args.duration / 1e-3) * 100
    print(f"{'':24}{'numba':>14}{'python':>14}{'speedup':>10}")
    rows = [
        ("controller call", fast["control"] * 1e6, slow["control"] * 1e6, "us"),
        ("dynamics call", fast["rhs"] * 1e6, slow["rhs"] * 1e6, "us"),
        (f"closed loop {args.duration:g} s", fast["loop"], slow["loop"], "s"),
    ]
    for name, a, b, unit in rows:
        print(f"{name:24}{a:>11.3f} {unit:<2}{b:>11.3f} {unit:<2}{b / a:>9.1f}x")
    print(f"{'first run (compile)':24}{fast['warmup']:>11.3f} s {slow['warmup']:>11.3f} s")
    print(f"closed loop covers {steps} internal RK4 steps")


if __name__ == "__main__":
    main()
