"""Acceptance criteria 1-11, each at its stated tolerance.

Every verdict is also echoed in the terminal summary as a PASS/FAIL line.
"""

import pytest

from conftest import ACCEPTANCE_LINES
from protective import acceptance


@pytest.fixture(scope="module")
def sweeps():
    return acceptance._sweeps()


def check(verdict):
    line = f"criterion {verdict.line()}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert verdict.passed, line


def test_criterion_01_protective_fidelity():
    check(acceptance.criterion_1())


def test_criterion_02_u_app_conservation_on_shipped_scenarios():
    check(acceptance.criterion_2())


def test_criterion_03_sandwich_identities():
    check(acceptance.criterion_3(seed=0))


def test_criterion_04_commutator_dichotomy(sweeps):
    check(acceptance.criterion_4(sweeps))


def test_criterion_05_coupling_commutator_scaling(sweeps):
    check(acceptance.criterion_5(sweeps))


def test_criterion_06_superposition_entanglement():
    check(acceptance.criterion_6())


def test_criterion_07_two_box():
    check(acceptance.criterion_7())


def test_criterion_08_phase_blindness():
    check(acceptance.criterion_8(seed=0))


def test_criterion_09_tomography():
    check(acceptance.criterion_9())


def test_criterion_10_retune():
    check(acceptance.criterion_10())


def test_criterion_11_numerics_hygiene(sweeps):
    check(acceptance.criterion_11(sweeps=sweeps))


def test_verify_command_passes(capsys):
    from protective.cli import main

    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "33/33 verdicts passed" in out or "verdicts passed" in out
    assert "FAIL" not in out
