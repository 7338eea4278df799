import os

import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=60, deadline=None)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

_CRITERIA: dict[str, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion")


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if report.when not in ("setup", "call") or "criterion" not in props:
        return
    cid, title = props["criterion"]
    if _CRITERIA.get(cid, ("",))[0] == "FAIL":
        return
    if report.skipped:
        reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
        _CRITERIA[cid] = ("SKIP", title, reason.replace("Skipped: ", ""))
    elif report.failed:
        crash = getattr(report.longrepr, "reprcrash", None)
        note = crash.message.splitlines()[0] if crash is not None else ""
        _CRITERIA[cid] = ("FAIL", title, note)
    elif report.when == "call":
        _CRITERIA[cid] = ("PASS", title, "")


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        item.user_properties.append(("criterion", tuple(marker.args)))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA, key=int):
        status, title, note = _CRITERIA[cid]
        line = f"criterion {cid:>2} {status:4} {title}"
        terminalreporter.write_line(line + (f"  [{note}]" if note else ""))
