"""Acceptance suite at the pinned tolerances, one line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py [--quick]``.
"""

import sys

import pytest

from hsurflab.acceptance import CHECKS, run_criterion

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # direct execution outside the tests directory
    ACCEPTANCE_LINES = []


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number):
    res = run_criterion(number)
    ACCEPTANCE_LINES.append(res.line())
    print(res.line())
    assert res.passed, res.line() + (f" | {res.note}" if res.note else "")


if __name__ == "__main__":
    quick = "--quick" in sys.argv
    results = [run_criterion(k, quick=quick) for k in sorted(CHECKS)]
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)
