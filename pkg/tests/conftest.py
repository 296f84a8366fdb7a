import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def csv_day(household, day, values, start_slot=0):
    """Rows of the readings CSV for one household-day."""
    lines = []
    for s, v in enumerate(values, start=start_slot):
        lines.append(f"{household},{day}T{s // 4:02d}:{15 * (s % 4):02d}:00,{v}")
    return lines


# ------------------------------------------------ acceptance criteria report

CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    entry = CRITERIA.setdefault(number, {"title": title, "ok": True, "details": []})
    entry["ok"] = entry["ok"] and rep.passed
    entry["details"] += [v for k, v in item.user_properties if k == "detail"]
    if rep.failed:
        entry["details"].append(f"FAILED in {item.name}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        e = CRITERIA[number]
        line = f"criterion {number:2d}  {'PASS' if e['ok'] else 'FAIL'}  {e['title']}"
        if e["details"]:
            line += "  [" + "; ".join(e["details"]) + "]"
        terminalreporter.write_line(line)
