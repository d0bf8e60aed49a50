"""Coordinated disclosure: 90-day public-disclosure deadlines per flaw."""

from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import enum
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

DISCLOSURE_WINDOW = dt.timedelta(days=90)

CASES_HEADER = ("record_id", "vendor_contacted_on", "state", "deadline", "disclosed_on")


class State(str, enum.Enum):
    PRIVATE = "private"
    REPORTED = "reported"
    FIXED = "fixed"
    DISCLOSED = "disclosed"


class TransitionError(ValueError):
    pass


# (state, event) -> next state
_EDGES = {
    (State.PRIVATE, "report"): State.REPORTED,
    (State.REPORTED, "fix"): State.FIXED,
    (State.REPORTED, "disclose"): State.DISCLOSED,
    (State.FIXED, "disclose"): State.DISCLOSED,
}


def parse_date(value: str | dt.date) -> dt.date:
    if isinstance(value, dt.date):
        return value
    try:
        return dt.date.fromisoformat(value)
    except (TypeError, ValueError):
        raise ValueError(f"invalid ISO date: {value!r}") from None


def compute_deadline(contacted: str | dt.date) -> dt.date:
    return parse_date(contacted) + DISCLOSURE_WINDOW


@dataclass(frozen=True)
class DisclosureCase:
    record_id: int
    vendor_contacted_on: dt.date | None = None
    state: State = State.PRIVATE
    disclosed_on: dt.date | None = None

    def __post_init__(self):
        if self.record_id < 0:
            raise ValueError("record_id must be non-negative")
        object.__setattr__(self, "state", State(self.state))
        if self.state is State.DISCLOSED and self.disclosed_on is None:
            raise ValueError(f"case {self.record_id}: disclosed without a disclosure date")
        if self.state is not State.PRIVATE and self.vendor_contacted_on is None:
            raise ValueError(f"case {self.record_id}: vendor contact date missing")

    @property
    def deadline(self) -> dt.date | None:
        if self.vendor_contacted_on is None:
            return None
        return compute_deadline(self.vendor_contacted_on)


def transition(case: DisclosureCase, event: str, on: str | dt.date) -> DisclosureCase:
    """Advance a case along private -> reported -> fixed -> disclosed.

    ``report`` is the first vendor communication and starts the 90-day clock.
    ``disclose`` is also legal straight from ``reported`` (deadline reached
    without a fix).
    """
    on = parse_date(on)
    nxt = _EDGES.get((case.state, event))
    if nxt is None:
        raise TransitionError(f"cannot '{event}' a case in state '{case.state.value}'")
    if case.vendor_contacted_on is not None and on < case.vendor_contacted_on:
        raise TransitionError(f"{on} precedes the vendor contact date {case.vendor_contacted_on}")
    changes: dict = {"state": nxt}
    if event == "report":
        changes["vendor_contacted_on"] = case.vendor_contacted_on or on
    elif event == "disclose":
        changes["disclosed_on"] = on
    return dataclasses.replace(case, **changes)


def overdue_cases(cases: Iterable[DisclosureCase], today: str | dt.date) -> list[DisclosureCase]:
    """Undisclosed cases past their deadline; the deadline day itself is not overdue."""
    today = parse_date(today)
    late = [c for c in cases
            if c.state is not State.DISCLOSED and c.deadline is not None and c.deadline < today]
    return sorted(late, key=lambda c: (c.deadline, c.record_id))


def _fmt(d: dt.date | None) -> str:
    return d.isoformat() if d else ""


def dump_cases(cases: Sequence[DisclosureCase]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CASES_HEADER)
    for c in cases:
        w.writerow((c.record_id, _fmt(c.vendor_contacted_on), c.state.value,
                    _fmt(c.deadline), _fmt(c.disclosed_on)))
    return buf.getvalue()


def parse_cases(text: str) -> list[DisclosureCase]:
    cases = []
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(x.strip() for x in r)]
    if rows and tuple(rows[0]) == CASES_HEADER:
        rows = rows[1:]
    for lineno, row in enumerate(rows, 1):
        if len(row) != len(CASES_HEADER):
            raise ValueError(f"case line {lineno}: expected {len(CASES_HEADER)} fields, got {len(row)}")
        rid, contacted, state, deadline, disclosed = (x.strip() for x in row)
        case = DisclosureCase(
            int(rid),
            parse_date(contacted) if contacted else None,
            State(state),
            parse_date(disclosed) if disclosed else None,
        )
        if deadline and parse_date(deadline) != case.deadline:
            raise ValueError(f"case line {lineno}: stored deadline {deadline} "
                             f"disagrees with computed {_fmt(case.deadline)}")
        cases.append(case)
    return cases


def load_cases(path: str | Path) -> list[DisclosureCase]:
    path = Path(path)
    if not path.exists():
        return []
    return parse_cases(path.read_text(encoding="utf-8"))


def save_cases(path: str | Path, cases: Sequence[DisclosureCase]) -> None:
    Path(path).write_text(dump_cases(cases), encoding="utf-8")
