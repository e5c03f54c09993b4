import pytest

_ACCEPTANCE = {}
_DETAILS = {}


def pytest_runtest_logreport(report):
    if "acceptance" not in report.keywords:
        return
    if report.when == "call" or report.outcome != "passed":
        if _ACCEPTANCE.get(report.nodeid, "PASS") == "PASS":
            _ACCEPTANCE[report.nodeid] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, status in _ACCEPTANCE.items():
        name = nodeid.split("::", 1)[-1]
        detail = _DETAILS.get(nodeid)
        terminalreporter.write_line(f"{status}  {name}" + (f"  ({detail})" if detail else ""))
    passed = sum(1 for s in _ACCEPTANCE.values() if s == "PASS")
    terminalreporter.write_line(f"{passed}/{len(_ACCEPTANCE)} acceptance criteria passed")


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the acceptance summary."""

    def note(text):
        _DETAILS[request.node.nodeid] = text

    return note
