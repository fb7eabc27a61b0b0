"""Acceptance suite: one test per acceptance criterion.

Each criterion's PASS/FAIL line, with the numbers behind it, is printed in
the terminal summary (see ``conftest.py``).  ``cv-entangler validate`` runs
the same checks.
"""

import pytest

from cv_entangler import validation

RESULTS = []


@pytest.mark.parametrize("number", [n for n, _, _ in validation.CRITERIA])
def test_criterion(number):
    result = validation.run_criterion(number)
    RESULTS.append(result)
    assert result.passed, "\n".join(result.details)
