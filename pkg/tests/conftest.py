import numpy as np
import pytest

from elimtemplate.problems import get_problem
from elimtemplate.template import GeneratorOptions, generate_template

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _template(name, **kw):
    return generate_template(get_problem(name), GeneratorOptions(seed=42, **kw))


@pytest.fixture(scope="session")
def toy_template():
    return _template("toy_univariate")


@pytest.fixture(scope="session")
def conics_template():
    return _template("toy_conics")


@pytest.fixture(scope="session")
def even_template():
    return _template("toy_even")


@pytest.fixture(scope="session")
def five_pt_template():
    return _template("relpose_5pt")


@pytest.fixture(scope="session")
def four_pt_template():
    return _template("relpose_4pt_rotation_angle")
