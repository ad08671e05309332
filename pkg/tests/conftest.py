import pytest

ACCEPTANCE = []


class Recorder:
    def __init__(self, log):
        self.log = log

    def __call__(self, criterion, passed, detail=""):
        line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        self.log.append(line)
        print(line)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return Recorder(ACCEPTANCE)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
