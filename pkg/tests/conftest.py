from pathlib import Path

import numpy as np
import pytest

from contactkit.population import ModelPopulation, PopulationPyramid

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "contactkit" / "data"
GOLDEN = ROOT / "tests" / "golden"

HEADER = ("record_type,id,age,age_hi,sex,province,household_size,survey_date,"
          "relation,location,duration_minutes")


def p_row(pid, age=30, sex="male", province="Sichuan", hh=3, day="2020-03-10"):
    return f"P,{pid},{age},,{sex},{province},{hh},{day},,,"


def c_row(pid, age=30, minutes=60, relation="household_member", location="home", age_hi=""):
    return f"C,{pid},{age},{age_hi},,,,,{relation},{location},{minutes}"


def diary_text(*rows):
    return "\n".join((HEADER,) + rows) + "\n"


@pytest.fixture(scope="session")
def pyramid():
    return PopulationPyramid.from_csv(DATA / "example_pyramid.csv")


@pytest.fixture(scope="session")
def population(pyramid):
    return ModelPopulation.from_pyramid(pyramid)


@pytest.fixture(scope="session")
def fixture_matrices():
    from contactkit.analysis import MixingMatrices
    return MixingMatrices.from_json((GOLDEN / "estimate" / "matrices.json").read_text())


def random_matrices(rng, zero_frac=0.2):
    from contactkit.analysis import MixingMatrices
    M = rng.uniform(0.1, 4.0, (6, 6)) * (rng.random((6, 6)) > zero_frac)
    np.fill_diagonal(M, rng.uniform(0.5, 4.0, 6))
    T = np.where(M > 0, rng.uniform(0.1, 12.0, (6, 6)), 0.0)
    return MixingMatrices(M, T, np.full(6, 10))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
