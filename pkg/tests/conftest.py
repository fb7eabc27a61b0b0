import sys

from cv_entangler import validation


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for result in sorted(results, key=lambda r: r.number):
        terminalreporter.write_line(validation.format_result(result, timing=True))
