import pytest

CRITERIA = {}


@pytest.fixture
def record(request):
    """Attach a one-line detail to the running acceptance test."""
    def _record(detail):
        request.node.user_properties.append(("detail", detail))
    return _record


def pytest_runtest_logreport(report):
    marker = "test_acceptance.py::test_criterion_"
    if marker not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        num = int(report.nodeid.split(marker)[1].split("_")[0])
        detail = dict(report.user_properties).get("detail", "")
        CRITERIA[num] = (report.outcome, report.duration, report.nodeid.split("::")[-1], detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        outcome, dur, name, detail = CRITERIA[num]
        tag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {tag} {name} ({dur:.1f}s) {detail}")
