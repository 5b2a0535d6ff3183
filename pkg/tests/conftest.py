import pytest

from acceptance_report import RESULTS
from webfix import FixtureHTTPServer


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, ok in RESULTS:
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")


@pytest.fixture
def http_server():
    server = FixtureHTTPServer().start()
    yield server
    server.stop()


@pytest.fixture(scope="session")
def session_http_server():
    server = FixtureHTTPServer().start()
    yield server
    server.stop()
