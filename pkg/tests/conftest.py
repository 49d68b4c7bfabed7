import sys


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdict lines after the test run."""
    # grab the module instance pytest actually imported
    mod = next(
        (m for name, m in sys.modules.items()
         if name.rpartition(".")[2] == "test_acceptance" and m is not None),
        None,
    )
    lines = getattr(mod, "VERDICT_LINES", None)
    if lines:
        terminalreporter.section("acceptance verdicts")
        for line in lines:
            terminalreporter.write_line(line)
