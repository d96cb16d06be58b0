"""Acceptance suite at full size: one pass/fail line per criterion.

Criteria 3, 4, 5 and 7 run 10^4 to 10^5 Monte Carlo replicas each; expect
several minutes in total.  Run just this file with
``pytest tests/test_acceptance.py -v -s``.
"""

import pytest

from cabm import acceptance

SEED = 20240611


@pytest.mark.slow
@pytest.mark.parametrize("criterion", acceptance.CRITERIA,
                         ids=[f"c{i}_{fn.__name__.removeprefix('criterion_')}"
                              for i, fn in enumerate(acceptance.CRITERIA, start=1)])
def test_criterion(criterion, capsys):
    res = criterion(quick=False, seed=SEED)
    with capsys.disabled():
        print("\n" + res.line())
    if res.budget is not None:
        assert res.details["runtime_within_budget"], f"{res.runtime:.1f}s > {res.budget}s"
    assert res.passed, res.summary
