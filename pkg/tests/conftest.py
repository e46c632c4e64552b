"""Echo acceptance verdict lines after the terminal summary.

The acceptance tests print one PASS/FAIL line each; pytest captures
those by default, so this hook repeats them where they are always
visible.
"""

import helpers


def pytest_terminal_summary(terminalreporter):
    if helpers.VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in helpers.VERDICTS:
            terminalreporter.write_line(line)
