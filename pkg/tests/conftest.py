import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))

WITNESS = (12, (10, 20, 19, 5, 9, 24, 11, 16))


@pytest.fixture
def rng():
    return np.random.default_rng(20171)


def save_gray(path, arr):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="L").save(path)


@pytest.fixture
def small_dataset(tmp_path, rng):
    """2 categories x 3 random 12x10 images as category subfolders."""
    root = tmp_path / "ds"
    for cat in ("bark", "sand"):
        for k in range(3):
            save_gray(root / cat / f"img{k}.png", rng.integers(0, 256, (10, 12)))
    return root


@pytest.fixture
def identical_dataset(tmp_path, rng):
    """4 categories x 8 copies of one random 20x20 image per category."""
    root = tmp_path / "same"
    for c in range(4):
        img = rng.integers(0, 256, (20, 20))
        for k in range(8):
            save_gray(root / f"cat{c}" / f"{k}.png", img)
    return root


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion
# ---------------------------------------------------------------------------

_titles = {}
_status = {}
_notes = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _titles[item.nodeid] = (mark.args[0], mark.args[1])


def pytest_runtest_logreport(report):
    if report.nodeid not in _titles:
        return
    current = _status.get(report.nodeid, "PASS")
    if report.failed:
        current = "FAIL"
    elif report.skipped and current != "FAIL":
        current = "SKIP"
    _status[report.nodeid] = current
    if report.user_properties:
        _notes[report.nodeid] = ", ".join(f"{k}={v}" for k, v in report.user_properties)


def pytest_terminal_summary(terminalreporter):
    if not _status:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (number, title) in sorted(_titles.items(), key=lambda kv: kv[1][0]):
        if nodeid in _status:
            note = f"  ({_notes[nodeid]})" if nodeid in _notes else ""
            terminalreporter.write_line(f"[{_status[nodeid]}] criterion {number:>2}: {title}{note}")
