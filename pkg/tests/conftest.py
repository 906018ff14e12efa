import hypothesis
import numpy as np
import pytest

from fmtl.model import DesignKind, ObservationSet, SampleBundle
from fmtl.simgen import common_design_points

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=100, derandomize=True
)
hypothesis.settings.load_profile("default")


def make_common_sets(n, m, fn=None, noise=0.0, seed=0, start_id=0):
    """Subjects on the shared equidistant design with values fn(t) + noise."""
    rng = np.random.default_rng(seed)
    t = common_design_points(m)
    sets = []
    for i in range(n):
        y = fn(t) if fn is not None else np.zeros(m)
        if noise:
            y = y + noise * rng.standard_normal(m)
        sets.append(ObservationSet(start_id + i, t, y))
    return sets


def make_independent_sets(n, m, fn=None, noise=0.0, seed=0, start_id=0):
    rng = np.random.default_rng(seed)
    sets = []
    for i in range(n):
        t = rng.random(m)
        y = fn(t) if fn is not None else np.zeros(m)
        if noise:
            y = y + noise * rng.standard_normal(m)
        sets.append(ObservationSet(start_id + i, t, y))
    return sets


def make_bundle(design=DesignKind.COMMON, n_t=4, m_t=6, groups=(), fn=None, noise=0.0, seed=0):
    maker = make_common_sets if design is DesignKind.COMMON else make_independent_sets
    target = maker(n_t, m_t, fn=fn, noise=noise, seed=seed)
    sources = tuple(
        tuple(maker(n_s, m_s, fn=fn, noise=noise, seed=seed + 100 + k))
        for k, (n_s, m_s) in enumerate(groups)
    )
    return SampleBundle(design, tuple(target), sources)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance per-criterion lines past pytest's capture."""
    try:
        from test_acceptance import REPORT_LINES
    except ImportError:
        return
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in REPORT_LINES:
            terminalreporter.write_line(line)
