"""Acceptance matrix: one test per headline criterion, at the stated
tolerances and runtime budgets.  Each test prints its own pass/fail line."""

import pytest

from snum.selftest import ACCEPTANCE_CHECKS


@pytest.mark.parametrize(
    "name,check", ACCEPTANCE_CHECKS, ids=[name for name, _ in ACCEPTANCE_CHECKS]
)
def test_acceptance(name, check, capsys):
    result = check()
    mark = "PASS" if result.passed else "FAIL"
    with capsys.disabled():
        print(f"\n[{mark}] {name} ({result.elapsed:.1f}s): {result.detail}")
    assert result.passed, result.detail
