import numpy as np
import pytest

from fvkit.core import CameraIntrinsics


@pytest.fixture
def rng():
    return np.random.default_rng(20240228)


@pytest.fixture
def vga():
    """640x480 camera, fx = fy = 600, principal point at the image center."""
    return CameraIntrinsics(600.0, 600.0, 320.0, 240.0, 640, 480)


@pytest.fixture
def small_cam():
    return CameraIntrinsics(50.0, 50.0, 16.0, 12.0, 32, 24)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name, ok, seconds, budget, note in results:
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  [{seconds:.3f} s / {budget} s]{'  (' + note + ')' if note else ''}")
