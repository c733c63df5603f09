import pytest
from hypothesis import HealthCheck, settings

from tubefold.maps import experiment1, experiment2, experiment3

settings.register_profile(
    "tubefold", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
settings.load_profile("tubefold")

EX1_STEP0 = dict(l_L=0.75, l_R=0.75, r1=1.11, r2=0.58, r3=1.11)


@pytest.fixture(scope="session")
def ex1():
    return experiment1()


@pytest.fixture(scope="session")
def ex2():
    return experiment2()


@pytest.fixture(scope="session")
def ex3():
    return experiment3()


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
