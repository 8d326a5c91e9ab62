import numpy as np
import pytest

from gcrerank.features import FeatureSet, SampleMeta


def make_fs(x, cameras=None, identity=None, split=None, tracklet=None):
    x = np.asarray(x, dtype=np.float32)
    n = len(x)
    meta = SampleMeta(
        identity=np.arange(n) if identity is None else identity,
        camera=np.zeros(n, dtype=int) if cameras is None else cameras,
        tracklet=np.full(n, -1) if tracklet is None else tracklet,
        split=np.ones(n, dtype=int) if split is None else split,
    )
    return FeatureSet(x, meta)


def random_fs(seed, n, d, cams=1):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d)) / np.sqrt(d)
    return make_fs(x, cameras=rng.integers(cams, size=n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def report_criterion(num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
