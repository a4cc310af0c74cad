import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    outcomes: dict[int, bool] = {}
    for status, ok in (("passed", True), ("failed", False), ("error", False)):
        for report in terminalreporter.stats.get(status, []):
            m = _CRITERION.search(getattr(report, "nodeid", ""))
            if m is None:
                continue
            n = int(m.group(1))
            outcomes[n] = outcomes.get(n, True) and ok
    if not outcomes:
        return
    terminalreporter.write_line("")
    terminalreporter.write_sep("-", "acceptance criteria")
    for n in sorted(outcomes):
        terminalreporter.write_line(
            f"criterion {n}: {'PASS' if outcomes[n] else 'FAIL'}"
        )
