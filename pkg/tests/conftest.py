import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def natural_image_256():
    """256x256 8-bit test scene: the scikit-image camera frame when available."""
    try:
        from skimage.data import camera
    except ImportError:  # pragma: no cover - fallback scene
        y, x = np.mgrid[0:256, 0:256] / 256.0
        scene = 120 + 60 * np.sin(6 * x) * np.cos(4 * y) + 50 * ((x - 0.5) ** 2 + (y - 0.4) ** 2 < 0.06)
        return np.clip(scene, 0, 255).round()
    return camera()[::2, ::2].astype(np.float64)


@pytest.fixture(scope="session")
def scene256():
    return natural_image_256()


ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Criterion number -> (passed, summary); printed at the end of the run."""
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, summary = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if passed else 'FAIL'}  {summary}")
