import numpy as np
import pytest

from mgvton import data_model as dm
from mgvton.synthetic import make_triplet, triplet_seeds


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def small_triplets():
    """Four 64x48 triplets shared by the slower tests."""
    return [make_triplet(s, (64, 48), f"{i:05d}") for i, s in enumerate(triplet_seeds(4, 11))]


def random_keypoints(rng, height, width, visible_fraction=0.8):
    kp = np.zeros((dm.NUM_KEYPOINTS, 3))
    kp[:, 0] = rng.uniform(0, width - 1, dm.NUM_KEYPOINTS)
    kp[:, 1] = rng.uniform(0, height - 1, dm.NUM_KEYPOINTS)
    kp[:, 2] = rng.random(dm.NUM_KEYPOINTS) < visible_fraction
    kp[kp[:, 2] == 0, :2] = dm.INVISIBLE
    return kp


ACCEPTANCE_LINES = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    """Register one acceptance line; the summary prints them in criterion order."""
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number:2d}  {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
