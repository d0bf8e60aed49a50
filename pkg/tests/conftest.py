import copy
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"
TABLE1_ROOT = FIXTURES / "table1"

MINIMAL = {
    "title": "Heap overflow in joint_state parser",
    "description": "Crafted message overflows the heap.",
    "severity": {"rvss-score": "None", "rvss-vector": "", "severity-description": ""},
    "flaw": {},
    "mitigation": {},
}


def minimal_record(**overrides) -> dict:
    doc = copy.deepcopy(MINIMAL)
    doc.update(overrides)
    return doc


@pytest.fixture
def minimal():
    return minimal_record()


# --- acceptance reporting -------------------------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    n, title = marker.args
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "detail": []})
    if rep.failed:
        entry["ok"] = False
        entry["detail"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["ok"] else "FAIL (" + ", ".join(e["detail"]) + ")"
        terminalreporter.write_line(f"criterion {n}: {e['title']}: {status}")
