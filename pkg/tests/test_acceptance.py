"""Acceptance criteria 1-10.

Each test prints one PASS/FAIL line with the measured value, the target
tolerance and the runtime; run with ``pytest -s tests/test_acceptance.py``
to see them inline, or ``qsnp selftest``.  They are also repeated in the
terminal summary.
"""

import pytest

from qsnp import checks

from conftest import ACCEPTANCE_LINES

CRITERIA = {fn.__name__.removeprefix("check_"): fn for fn in checks.ALL_CHECKS}


@pytest.mark.parametrize("name", list(CRITERIA))
def test_criterion(name, request):
    result = CRITERIA[name]()
    print(result.line())
    request.config.stash.setdefault(ACCEPTANCE_LINES, []).append(result.line())
    assert result.passed, result.line()
