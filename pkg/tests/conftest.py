import math

import pytest

from qsnp.constants import C_LIGHT, HBAR
from qsnp.medium import MediumParams, TransitionSpec

OMEGA0 = 3e15
DIPOLE = 2.5e-18


def medium_with_wp(omega_p: float, w: float = 1.0, beta: float | None = None, L: float = 1.0, S: float = 1e-3) -> MediumParams:
    """Medium whose plasma frequency is exactly-ish ``omega_p`` (rad/s)."""
    N = omega_p**2 * HBAR / (8.0 * math.pi * DIPOLE**2 * OMEGA0)
    return MediumParams(TransitionSpec(OMEGA0, dipole_d=DIPOLE, beta=beta), N, w, L, S)


@pytest.fixture
def c():
    return C_LIGHT


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
