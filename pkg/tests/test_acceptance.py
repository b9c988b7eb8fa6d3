"""Acceptance criteria 1-10, one pass/fail line each.

Run directly (``python tests/test_acceptance.py``) or through pytest, which
prints the lines in an "acceptance criteria" section of the summary.
"""

import pytest

from thermofractal.verify import CRITERIA, run_criterion

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []


@pytest.mark.parametrize("cid", list(CRITERIA))
def test_criterion(cid):
    result = run_criterion(cid)
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line


if __name__ == "__main__":
    import sys

    results = [run_criterion(cid) for cid in CRITERIA]
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)
