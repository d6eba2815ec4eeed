import numpy as np
import pytest
from hypothesis import settings

from distsddm.generators import random_sddm, random_system

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_by_two():
    return np.array([[2.0, -1.0], [-1.0, 2.0]])


@pytest.fixture
def path3_plus_identity():
    # unit-weight path Laplacian plus I
    return np.array([[2.0, -1.0, 0.0], [-1.0, 3.0, -1.0], [0.0, -1.0, 2.0]])


@pytest.fixture(scope="session")
def small_corpus():
    """Eight seeded grounded random graphs with n in [5, 20]."""
    return [random_system(seed, n_range=(5, 20), p=0.4) for seed in range(8)]


def sddm_instances(count, n_range=(2, 30), seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        yield random_sddm(n, rng)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion that ran."""
    import sys

    module = sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(results):
        ok, detail = results[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
