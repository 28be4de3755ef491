import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# One human-readable verdict line per acceptance criterion, echoed after the
# test summary so they are visible even with output capture enabled.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
