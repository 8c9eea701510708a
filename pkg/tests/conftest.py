import pytest

_results = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    criterion = dict(report.user_properties).get("criterion")
    if criterion is not None:
        _results.setdefault(criterion, []).append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_results, key=lambda c: (int(c.split()[0]), c)):
        failed = [name for name, outcome in _results[criterion] if outcome != "passed"]
        verdict = "FAIL" if failed else "PASS"
        detail = f"  (failing: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"{verdict}  criterion {criterion}{detail}")


@pytest.fixture
def criterion(record_property):
    def tag(label):
        record_property("criterion", label)

    return tag
