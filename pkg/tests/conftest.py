import time

from hypothesis import settings

# property tests assert exact invariants; derandomizing keeps reruns stable
settings.register_profile("repeatable", derandomize=True)
settings.load_profile("repeatable")

_ACCEPTANCE_LINES = []


def record_criterion(number: int, description: str, passed: bool, detail: str,
                     started: float) -> None:
    """Collect one acceptance line; printed in the terminal summary."""
    status = "PASS" if passed else "FAIL"
    elapsed = time.perf_counter() - started
    _ACCEPTANCE_LINES.append(
        f"[{status}] criterion {number:2d} ({elapsed:6.1f}s): {description} -- {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
