import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
DEMO = ROOT / "demo"
sys.path.insert(0, str(Path(__file__).resolve().parent))

CRITERIA = {
    1: "error-semantics conformance against the reference machine",
    2: "unbound and type-incompatibility rules",
    3: "compression oracle",
    4: "metalevel law",
    5: "lifecycle demo",
    6: "personalization laws",
    7: "schema determinism and faithfulness",
    8: "CLI determinism",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion this test checks")


def pytest_runtest_logreport(report):
    marks = getattr(report, "criterion", None)
    if marks is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes.setdefault(marks, []).append(report.outcome == "passed")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        report.criterion = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n} ({title}): {status}")


@pytest.fixture(scope="session")
def demo_model():
    from ecm import parse_model

    return parse_model((DEMO / "portal.ecm").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def demo_docs():
    from ecm import parse_document

    return [
        (p.name, parse_document(p.read_text(encoding="utf-8")))
        for p in sorted((DEMO / "content").glob("*.ecd"))
    ]
