import pytest

from vertexfol.modules import adjoint_module
from vertexfol.voa import heisenberg_voa

A = (1,)
VAC = ()
AA = (1, 1)
A2 = (2,)


@pytest.fixture(scope="session")
def alg():
    return heisenberg_voa(6)


@pytest.fixture(scope="session")
def mod(alg):
    return adjoint_module(alg)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
