"""Per-window attribute summary tables on the monthly meeting schedule.

Each active client contributes one row per window size: the counts of
each event type and keyword flag over the w days before the first
monthly meeting at which the client has been in the system for at least
w days, plus the chronic label.
"""

from __future__ import annotations

import csv
from bisect import bisect_left
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Sequence

import numpy as np

from .events import (
    ACTIVE_WINDOW_DAYS,
    KEYWORD_NAMES,
    ClientTimeline,
    EntryType,
    label_chronic,
)

WINDOW_SIZES = (30, 60, 90, 120)

ENTRY_ATTRIBUTES = ("EntrySleep", "EntryLog", "EntryBar", "EntryConsl")
DEFAULT_ATTRIBUTES = ENTRY_ATTRIBUTES + KEYWORD_NAMES  # K = 14

CORE_ATTRIBUTES = ("EntrySleep", "EntryBar", "EntryConsl")
EXTENDED_ATTRIBUTES = CORE_ATTRIBUTES + ("Violence", "Overdose", "Addiction")

_ENTRY_COLUMN = {
    EntryType.SLEEP: 0,
    EntryType.LOG: 1,
    EntryType.BAR: 2,
    EntryType.COUNSEL: 3,
}


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered subset of the canonical attribute counters."""

    names: tuple[str, ...]
    indices: tuple[int, ...]  # positions in DEFAULT_ATTRIBUTES

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "AttributeSchema":
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError("duplicate attribute names")
        try:
            idx = tuple(DEFAULT_ATTRIBUTES.index(n) for n in names)
        except ValueError:
            unknown = [n for n in names if n not in DEFAULT_ATTRIBUTES]
            raise ValueError(f"unknown attributes: {unknown}") from None
        return cls(names=names, indices=idx)

    @classmethod
    def full(cls) -> "AttributeSchema":
        return cls.from_names(DEFAULT_ATTRIBUTES)

    @classmethod
    def core(cls) -> "AttributeSchema":
        return cls.from_names(CORE_ATTRIBUTES)

    @classmethod
    def extended(cls) -> "AttributeSchema":
        return cls.from_names(EXTENDED_ATTRIBUTES)

    def __len__(self) -> int:
        return len(self.names)


def schema_by_name(selector: str) -> AttributeSchema:
    """Resolve 'core' | 'extended' | 'all' | comma-separated names."""
    if selector == "core":
        return AttributeSchema.core()
    if selector == "extended":
        return AttributeSchema.extended()
    if selector == "all":
        return AttributeSchema.full()
    return AttributeSchema.from_names(s.strip() for s in selector.split(",") if s.strip())


class ClientWindowIndex:
    """Cumulative per-event counters enabling O(log n) window sums.

    Column layout is DEFAULT_ATTRIBUTES: one column per entry type plus
    one per keyword flag; an event increments its entry-type column and
    every set flag column.
    """

    __slots__ = (
        "client_id",
        "event_ords",
        "cum",
        "first_event_ord",
        "last_event_ord",
        "chronic",
        "first_stay",
        "first_qualifying_day",
    )

    def __init__(self, timeline: ClientTimeline):
        self.client_id = timeline.client_id
        n = len(timeline.events)
        ords = np.empty(n, dtype=np.int64)
        contrib = np.zeros((n, len(DEFAULT_ATTRIBUTES)), dtype=np.int32)
        for i, ev in enumerate(timeline.events):
            ords[i] = ev.day.toordinal()
            contrib[i, _ENTRY_COLUMN[ev.entry_type]] = 1
            for k, flag in enumerate(ev.flags):
                if flag:
                    contrib[i, 4 + k] = 1
        self.event_ords = ords
        cum = np.zeros((n + 1, len(DEFAULT_ATTRIBUTES)), dtype=np.int64)
        np.cumsum(contrib, axis=0, out=cum[1:])
        self.cum = cum
        self.first_event_ord = int(ords[0]) if n else None
        self.last_event_ord = int(ords[-1]) if n else None
        label = label_chronic(timeline.stay_dates)
        self.chronic = label.is_chronic
        self.first_stay = timeline.stay_dates[0] if timeline.stay_dates else None
        self.first_qualifying_day = label.first_qualifying_day

    def window_counts(self, meeting_ord: int, window_days: int) -> np.ndarray:
        """Counts of all 14 attributes over [meeting - w, meeting)."""
        lo = int(np.searchsorted(self.event_ords, meeting_ord - window_days, side="left"))
        hi = int(np.searchsorted(self.event_ords, meeting_ord, side="left"))
        return self.cum[hi] - self.cum[lo]

    def active(self, meeting_ord: int) -> bool:
        lo = int(np.searchsorted(self.event_ords, meeting_ord - ACTIVE_WINDOW_DAYS, side="left"))
        hi = int(np.searchsorted(self.event_ords, meeting_ord, side="left"))
        return hi > lo


@dataclass
class AttributeSummaryTable:
    window_days: int
    schema: AttributeSchema
    client_ids: list[str]
    counts: np.ndarray  # (N, K) int64, schema column order
    labels: np.ndarray  # (N,) bool
    meeting_dates: list[date]  # meeting used for each row

    @property
    def n_rows(self) -> int:
        return len(self.client_ids)


def meeting_schedule(study_start: date, study_end: date) -> list[date]:
    """First-of-month meeting dates in (study_start, study_end]."""
    if study_start >= study_end:
        raise ValueError("study_start must precede study_end")
    year, month = study_start.year, study_start.month
    month += 1
    if month > 12:
        year, month = year + 1, 1
    meetings = []
    d = date(year, month, 1)
    while d <= study_end:
        meetings.append(d)
        if d.month == 12:
            d = date(d.year + 1, 1, 1)
        else:
            d = date(d.year, d.month + 1, 1)
    return meetings


def data_span(timelines: Iterable[ClientTimeline]) -> tuple[date, date]:
    """Earliest and latest event date across all timelines."""
    first = last = None
    for tl in timelines:
        if not tl.events:
            continue
        if first is None or tl.events[0].day < first:
            first = tl.events[0].day
        if last is None or tl.events[-1].day > last:
            last = tl.events[-1].day
    if first is None:
        raise ValueError("no events in any timeline")
    return first, last


def build_attribute_table(
    timelines: Sequence[ClientTimeline],
    window_days: int,
    schema: AttributeSchema | None = None,
    meetings: Sequence[date] | None = None,
) -> AttributeSummaryTable:
    """One row per client at their first qualifying monthly meeting.

    A meeting d qualifies when the client entered the system at least
    window_days before d and is active at d; counts are taken over
    [d - w, d).  Clients with no qualifying meeting are omitted.  Rows
    are ordered by client_id.
    """
    if window_days not in WINDOW_SIZES:
        raise ValueError(f"window_days must be one of {WINDOW_SIZES}, got {window_days}")
    if schema is None:
        schema = AttributeSchema.full()
    if meetings is None:
        start, end = data_span(timelines)
        meetings = meeting_schedule(start, end)
    meeting_ords = [m.toordinal() for m in meetings]

    rows = []
    for tl in sorted(timelines, key=lambda t: t.client_id):
        index = ClientWindowIndex(tl)
        if index.first_event_ord is None:
            continue
        # meetings earlier than entry + w can never qualify
        start_pos = bisect_left(meeting_ords, index.first_event_ord + window_days)
        for pos in range(start_pos, len(meeting_ords)):
            mo = meeting_ords[pos]
            if index.active(mo):
                counts = index.window_counts(mo, window_days)[list(schema.indices)]
                rows.append((tl.client_id, counts, index.chronic, meetings[pos]))
                break

    client_ids = [r[0] for r in rows]
    counts = (
        np.vstack([r[1] for r in rows])
        if rows
        else np.zeros((0, len(schema)), dtype=np.int64)
    )
    labels = np.array([r[2] for r in rows], dtype=bool)
    meeting_dates = [r[3] for r in rows]
    return AttributeSummaryTable(
        window_days=window_days,
        schema=schema,
        client_ids=client_ids,
        counts=counts,
        labels=labels,
        meeting_dates=meeting_dates,
    )


def write_attribute_table_csv(path, table: AttributeSummaryTable) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["client_id", *table.schema.names, "chronic"])
        for i, cid in enumerate(table.client_ids):
            writer.writerow([cid, *map(int, table.counts[i]), int(table.labels[i])])
