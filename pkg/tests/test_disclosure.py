import datetime as dt

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rvdtools.disclosure import (
    DisclosureCase,
    State,
    TransitionError,
    compute_deadline,
    dump_cases,
    load_cases,
    overdue_cases,
    parse_cases,
    save_cases,
    transition,
)

_DAYS_IN_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)


def plus_days_by_counting(y, m, d, n):
    """Calendar oracle: step one day at a time with explicit leap-year rules."""
    for _ in range(n):
        leap = y % 4 == 0 and (y % 100 != 0 or y % 400 == 0)
        last = 29 if m == 2 and leap else _DAYS_IN_MONTH[m - 1]
        d += 1
        if d > last:
            d, m = 1, m + 1
            if m > 12:
                m, y = 1, y + 1
    return f"{y:04d}-{m:02d}-{d:02d}"


@pytest.mark.parametrize("start,expected", [
    ("2019-10-01", "2019-12-30"),
    ("2020-01-01", "2020-03-31"),
    ("2019-01-01", "2019-04-01"),
    ("2099-12-15", "2100-03-15"),
])
def test_deadline_examples(start, expected):
    assert plus_days_by_counting(*map(int, start.split("-")), 90) == expected
    assert compute_deadline(start).isoformat() == expected


@given(st.dates(dt.date(1900, 1, 1), dt.date(2400, 12, 31)))
def test_deadline_is_ninety_days(d):
    deadline = compute_deadline(d)
    assert (deadline - d).days == 90
    assert deadline - dt.timedelta(days=90) == d


def test_invalid_date():
    with pytest.raises(ValueError):
        compute_deadline("2019-02-30")
    with pytest.raises(ValueError):
        compute_deadline("01/10/2019")


def reported(contacted="2019-10-01", rid=1):
    return transition(DisclosureCase(rid), "report", contacted)


def test_boundary_day_not_overdue():
    case = reported()
    assert overdue_cases([case], "2019-12-30") == []
    assert overdue_cases([case], "2019-12-31") == [case]


def test_disclosed_never_overdue():
    case = transition(reported(), "disclose", "2019-12-31")
    assert overdue_cases([case], "2030-01-01") == []


def test_private_without_contact_not_overdue():
    assert overdue_cases([DisclosureCase(3)], "2030-01-01") == []


def test_overdue_sorted_by_deadline():
    cases = [reported("2019-05-01", 2), reported("2019-01-01", 7), reported("2019-03-01", 1)]
    assert [c.record_id for c in overdue_cases(cases, "2020-01-01")] == [7, 1, 2]


@given(st.dates(dt.date(2018, 1, 1), dt.date(2021, 1, 1)),
       st.integers(0, 400), st.integers(0, 400))
def test_overdue_monotone_in_today(contacted, a, b):
    case = reported(contacted)
    t1 = contacted + dt.timedelta(days=min(a, b))
    t2 = contacted + dt.timedelta(days=max(a, b))
    if overdue_cases([case], t1):
        assert overdue_cases([case], t2)


def test_transitions():
    case = reported()
    assert case.state is State.REPORTED
    assert case.vendor_contacted_on == dt.date(2019, 10, 1)
    assert case.deadline == dt.date(2019, 12, 30)
    fixed = transition(case, "fix", "2019-11-01")
    assert fixed.state is State.FIXED
    done = transition(fixed, "disclose", "2019-11-02")
    assert done.state is State.DISCLOSED and done.disclosed_on == dt.date(2019, 11, 2)
    forced = transition(case, "disclose", "2019-12-31")
    assert forced.state is State.DISCLOSED


@pytest.mark.parametrize("state,event", [
    (State.PRIVATE, "fix"), (State.PRIVATE, "disclose"), (State.REPORTED, "report"),
    (State.FIXED, "fix"), (State.DISCLOSED, "disclose"), (State.REPORTED, "explode"),
])
def test_illegal_transitions(state, event):
    case = DisclosureCase(1, dt.date(2019, 1, 1), state,
                          dt.date(2019, 2, 1) if state is State.DISCLOSED else None)
    with pytest.raises(TransitionError):
        transition(case, event, "2019-03-01")


def test_event_before_contact_rejected():
    with pytest.raises(TransitionError):
        transition(reported(), "fix", "2019-09-01")


def test_disclosed_requires_date():
    with pytest.raises(ValueError):
        DisclosureCase(1, dt.date(2019, 1, 1), State.DISCLOSED)


def test_cases_file_roundtrip(tmp_path):
    cases = [reported("2019-10-01", 4), DisclosureCase(9),
             transition(reported("2020-01-01", 12), "disclose", "2020-04-01")]
    save_cases(tmp_path / "cases.txt", cases)
    assert load_cases(tmp_path / "cases.txt") == cases
    assert dump_cases(cases).splitlines()[1] == "4,2019-10-01,reported,2019-12-30,"


def test_cases_file_deadline_mismatch():
    with pytest.raises(ValueError, match="disagrees"):
        parse_cases("4,2019-10-01,reported,2019-12-31,\n")


def test_missing_cases_file(tmp_path):
    assert load_cases(tmp_path / "nope.txt") == []
