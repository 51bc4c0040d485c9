import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from starsrrr import RrrDataset

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_dataset(n, p, q, seed=0, rank_x=None):
    rng = np.random.default_rng(seed)
    if rank_x is None:
        x = rng.standard_normal((n, p))
    else:
        x = rng.standard_normal((n, rank_x)) @ rng.standard_normal((rank_x, p))
    y = rng.standard_normal((n, q))
    return RrrDataset(y=y, x=x)


def low_rank_dataset(n=60, p=8, q=6, r=2, scale=5.0, noise=0.3, seed=0):
    """Well-separated rank-``r`` signal plus small noise."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    c = scale * rng.standard_normal((p, r)) @ rng.standard_normal((r, q))
    y = x @ c + noise * rng.standard_normal((n, q))
    return RrrDataset(y=y, x=x)


@pytest.fixture
def small_data():
    return random_dataset(12, 4, 3, seed=11)


@pytest.fixture
def signal_data():
    return low_rank_dataset()


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line, print it, then assert the outcome."""

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  [{detail}]" if detail else "")
        print(line)
        request.config.stash.setdefault(ACCEPTANCE_LINES, []).append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
