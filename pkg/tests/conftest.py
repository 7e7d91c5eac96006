import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from acceptance_log import RESULTS  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def write_ppm():
    from percept.backend.image import encode_ppm

    def write(path, image):
        with open(path, "wb") as f:
            f.write(encode_ppm(image))
        return path

    return write


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        title, passed, detail = RESULTS[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}" + (f" ({detail})" if detail else ""))
