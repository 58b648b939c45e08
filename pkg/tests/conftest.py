import json
from pathlib import Path

import numpy as np
import pytest

from benjamin_waves import WaveParams, make_grid, solve_profile
from benjamin_waves.linearized import assemble_lplus, morse_index
from benjamin_waves.spectrum import kdv_spectrum

ORACLES = Path(__file__).parent / "oracles" / "oracles.json"

# Acceptance outcomes, filled in by test_acceptance and printed after the run.
CRITERIA = {}


def record(number, passed, detail):
    CRITERIA[number] = (bool(passed), detail)
    print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        passed, detail = CRITERIA[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def oracles():
    return json.loads(ORACLES.read_text())


_WAVES = {}


def wave(omega, p, n=2048, L=100 * np.pi):
    """Solve once per session for each (omega, p, grid)."""
    key = (omega, p, n, L)
    if key not in _WAVES:
        _WAVES[key] = solve_profile(WaveParams(omega, p), make_grid(n, L))
    return _WAVES[key]


@pytest.fixture(scope="session")
def wave_1_3():
    return wave(1.0, 3.0)


@pytest.fixture(scope="session")
def wave_10_10():
    return wave(10.0, 10.0, 2048, 8 * np.pi)


class Dense:
    """Dense operator data computed once for a wave."""

    def __init__(self, w):
        self.wave = w
        self.A = assemble_lplus(w)
        self.ground = morse_index(self.A)
        self._spectrum = None

    @property
    def spectrum(self):
        if self._spectrum is None:
            self._spectrum = kdv_spectrum(self.wave, A=self.A, ground=self.ground)
        return self._spectrum


@pytest.fixture(scope="session")
def dense_1_3(wave_1_3):
    return Dense(wave_1_3)


@pytest.fixture(scope="session")
def dense_10_10(wave_10_10):
    return Dense(wave_10_10)
