import os
import sys

sys.path.insert(0, os.path.dirname(__file__))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.VERDICTS, key=lambda k: (int(str(k).rstrip("ab")), str(k))):
        terminalreporter.write_line(mod.VERDICTS[key])
