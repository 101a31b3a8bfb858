import os
from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(os.environ.get("QKF_DATA_DIR", Path(__file__).resolve().parents[1] / "data"))
os.environ.setdefault("QKF_DATA_DIR", str(DATA_DIR))


def dataset_available(filename: str) -> bool:
    return (DATA_DIR / filename).is_file()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
