import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vistra import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the JIT kernels once so timed tests measure the scans only."""
    import oracles

    _kernels.warmup()
    oracles.warmup()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One always-visible pass/fail line per acceptance criterion."""
    seen: dict[str, str] = {}
    order: list[str] = []
    # later buckets override earlier ones, so any failure beats a pass
    for outcome in ("passed", "skipped", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            if name not in seen:
                order.append(name)
            seen[name] = outcome
    if not seen:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in order:
        verdict = "PASS" if seen[name] == "passed" else "FAIL"
        label = name.removeprefix("test_").replace("_", " ")
        terminalreporter.write_line(f"[{verdict}] {label}")
