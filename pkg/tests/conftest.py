import re


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, with the measured values."""
    lines = {}
    for status in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", nodeid)
            if not m or (rep.when != "call" and rep.outcome != "skipped" and status != "error"):
                continue
            detail = "; ".join(f"{k}={v}" for k, v in rep.user_properties)
            outcome = {"passed": "PASS", "skipped": "SKIP"}.get(status, "FAIL")
            lines[(int(m.group(1)), nodeid)] = f"criterion {int(m.group(1)):2d} {outcome}  {nodeid.split('::')[1]}  {detail}"
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
