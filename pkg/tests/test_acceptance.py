"""Acceptance suite: one pass/fail line per criterion.

Run ``pytest tests/test_acceptance.py -v -s`` or ``python tests/test_acceptance.py``
to see the lines; under plain ``pytest -v`` they are printed to the terminal
as each criterion finishes.
"""

from __future__ import annotations

import sys

import pytest

from mixvol.acceptance import CHECKS


@pytest.mark.parametrize("number", range(1, len(CHECKS) + 1))
def test_criterion(number, capsys):
    res = CHECKS[number - 1]()
    with capsys.disabled():
        print("\n" + res.line(), flush=True)
    assert res.passed, res.line()


if __name__ == "__main__":
    from mixvol.acceptance import run_all

    results = run_all(echo=print)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    sys.exit(0 if all(r.passed for r in results) else 1)
