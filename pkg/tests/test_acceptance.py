"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single pass/fail line with the measured quantities. Run as a
script to get only those lines:

    python3 tests/test_acceptance.py [numbers...]
"""

import sys

import pytest

from renyi_langevin.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = run_criterion(number)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()


if __name__ == "__main__":
    picked = [int(a) for a in sys.argv[1:]] or sorted(CRITERIA)
    results = [run_criterion(n) for n in picked]
    for r in results:
        print(r.line(), flush=True)
    sys.exit(0 if all(r.passed for r in results) else 1)
