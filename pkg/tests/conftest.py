import pytest

from expframe import build_mode_set, identify_series, preset, simulate

TOY_ORDER = 1200


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    return pytestconfig._acceptance_lines


@pytest.fixture(scope="session")
def toy():
    position, _ = simulate(preset("toy-sec3"))
    return position


@pytest.fixture(scope="session")
def toy_modes(toy):
    model = identify_series(toy, TOY_ORDER)
    return model, build_mode_set(model)
