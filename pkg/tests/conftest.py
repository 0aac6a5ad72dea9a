import os
import subprocess
import sys

import numpy as np
import pytest

from funnelquad import load_preset, run
from funnelquad.cli import default_disturbance
from funnelquad.plant import QuadParams

# One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append((float(number), line))
    print(line)
    return passed


def record_note(after, text):
    """Informational line listed right after criterion ``after``; not a criterion result."""
    line = f"        note: {text}"
    ACCEPTANCE_LINES.append((after + 0.5, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES, key=lambda item: item[0]):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ascent_cfg():
    return load_preset("ascent")


@pytest.fixture(scope="session")
def landing_cfg():
    return load_preset("landing")


@pytest.fixture(scope="session")
def warm_jit(ascent_cfg):
    run(ascent_cfg.replace(duration=0.01))
    return True


@pytest.fixture(scope="session")
def ascent_report(ascent_cfg, warm_jit):
    import time
    t0 = time.perf_counter()
    report = run(ascent_cfg)
    report.elapsed = time.perf_counter() - t0
    return report


@pytest.fixture(scope="session")
def landing_report(landing_cfg, warm_jit):
    return run(landing_cfg)


@pytest.fixture(scope="session")
def heavy_report(ascent_cfg, warm_jit):
    return run(ascent_cfg.replace(params=QuadParams(m=2.0)))


@pytest.fixture(scope="session")
def disturbed_report(ascent_cfg, warm_jit):
    return run(ascent_cfg.replace(disturbance=default_disturbance("sinusoid")))


def run_python(code, jit=True, timeout=600):
    """Run a snippet in a fresh interpreter with the JIT switched on or off."""
    env = dict(os.environ)
    env.pop("FUNNELQUAD_DISABLE_JIT", None)
    if not jit:
        env["FUNNELQUAD_DISABLE_JIT"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         timeout=timeout)
    if out.returncode != 0:
        raise AssertionError(out.stderr)
    return out.stdout


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
