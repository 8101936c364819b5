"""Client event timelines: parsing, stay/episode segmentation, chronic labeling.

A *stay* is a calendar day with at least one sleep-service event.  An
*episode* is a maximal run of stays whose consecutive gaps are under 30
days.  A client is *chronic* once a trailing 365-day window holds 180
stay days, or a trailing 1095-day window holds 546.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import Enum
from typing import Iterable, Sequence

EPISODE_GAP_DAYS = 30
ACTIVE_WINDOW_DAYS = 30

YEAR_WINDOW_DAYS = 365
YEAR_WINDOW_STAYS = 180
THREE_YEAR_WINDOW_DAYS = 1095
THREE_YEAR_WINDOW_STAYS = 546


class EntryType(Enum):
    SLEEP = "sleep"
    LOG = "log"
    BAR = "bar"
    COUNSEL = "counsel"


KEYWORD_NAMES = (
    "Violence",
    "Overdose",
    "PoliceJustice",
    "MentalHealth",
    "PhysicalHealth",
    "EMS",
    "Addiction",
    "Conflict",
    "BarKeyword",
    "Supports",
)

EVENT_CSV_HEADER = [
    "client_id",
    "date",
    "entry_type",
    "violence",
    "overdose",
    "police_justice",
    "mental_health",
    "physical_health",
    "ems",
    "addiction",
    "conflict",
    "bar_kw",
    "supports",
]


class EventParseError(ValueError):
    """Raised when an event CSV row cannot be parsed; carries the file line number."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


@dataclass(frozen=True, slots=True)
class EventRecord:
    """One timestamped client/shelter interaction (day resolution)."""

    client_id: str
    day: date
    entry_type: EntryType
    flags: tuple[bool, ...]  # keyword flags in KEYWORD_NAMES order

    def __post_init__(self):
        if len(self.flags) != len(KEYWORD_NAMES):
            raise ValueError(
                f"expected {len(KEYWORD_NAMES)} keyword flags, got {len(self.flags)}"
            )


@dataclass(frozen=True)
class Episode:
    start_date: date
    end_date: date
    stay_count: int


@dataclass(frozen=True)
class ChronicLabel:
    is_chronic: bool
    first_qualifying_day: date | None = None


@dataclass(frozen=True)
class ClientStats:
    total_stays: int
    total_episodes: int
    tenure_days: int
    usage_pct: float
    avg_gap_days: float


@dataclass(frozen=True)
class ClientTimeline:
    """All events for one client, sorted by day, with derived stay dates."""

    client_id: str
    events: tuple[EventRecord, ...]
    stay_dates: tuple[date, ...]

    @classmethod
    def from_events(cls, client_id: str, events: Iterable[EventRecord]) -> "ClientTimeline":
        ordered = tuple(sorted(events, key=lambda e: e.day))
        stays = sorted({e.day for e in ordered if e.entry_type is EntryType.SLEEP})
        return cls(client_id=client_id, events=ordered, stay_dates=tuple(stays))


def build_timelines(events: Iterable[EventRecord]) -> dict[str, ClientTimeline]:
    """Group an event stream into per-client timelines, keyed by client_id."""
    buckets: dict[str, list[EventRecord]] = {}
    for ev in events:
        buckets.setdefault(ev.client_id, []).append(ev)
    return {
        cid: ClientTimeline.from_events(cid, evs)
        for cid, evs in sorted(buckets.items())
    }


def segment_stays(timeline: ClientTimeline) -> list[date]:
    """Distinct calendar days with at least one sleep event, ascending."""
    return list(timeline.stay_dates)


def segment_episodes(stay_dates: Sequence[date]) -> list[Episode]:
    """Split stay dates into maximal runs with consecutive gaps < 30 days."""
    if not stay_dates:
        return []
    episodes = []
    start = prev = stay_dates[0]
    count = 1
    for d in stay_dates[1:]:
        if (d - prev).days < EPISODE_GAP_DAYS:
            count += 1
        else:
            episodes.append(Episode(start, prev, count))
            start = d
            count = 1
        prev = d
    episodes.append(Episode(start, prev, count))
    return episodes


def label_chronic(stay_dates: Sequence[date]) -> ChronicLabel:
    """Chronic-homelessness label over a client's full stay history.

    Scans stay dates in order with two trailing windows (365 and 1095
    days, inclusive of the evaluation day) and reports the earliest stay
    date on which either stay-count threshold is met.  Between stay
    dates the window counts cannot grow, so checking stay dates only is
    exhaustive.
    """
    ords = [d.toordinal() for d in stay_dates]
    lo_year = lo_long = 0
    for i, o in enumerate(ords):
        while ords[lo_year] < o - (YEAR_WINDOW_DAYS - 1):
            lo_year += 1
        while ords[lo_long] < o - (THREE_YEAR_WINDOW_DAYS - 1):
            lo_long += 1
        if (i - lo_year + 1 >= YEAR_WINDOW_STAYS
                or i - lo_long + 1 >= THREE_YEAR_WINDOW_STAYS):
            return ChronicLabel(True, stay_dates[i])
    return ChronicLabel(False, None)


def is_active(timeline: ClientTimeline, meeting_date: date) -> bool:
    """True iff the client has any event in the 30 days before the meeting.

    The window is [meeting_date - 30, meeting_date): the meeting day
    itself does not count, since triage lists are prepared beforehand.
    """
    lo = meeting_date - timedelta(days=ACTIVE_WINDOW_DAYS)
    return any(lo <= e.day < meeting_date for e in timeline.events)


def client_stats(stay_dates: Sequence[date]) -> ClientStats:
    """Descriptive shelter-access statistics for one client."""
    if not stay_dates:
        raise ValueError("client_stats requires at least one stay date")
    n = len(stay_dates)
    tenure = (stay_dates[-1] - stay_dates[0]).days + 1
    gaps = [(b - a).days for a, b in zip(stay_dates, stay_dates[1:])]
    return ClientStats(
        total_stays=n,
        total_episodes=len(segment_episodes(stay_dates)),
        tenure_days=tenure,
        usage_pct=100.0 * n / tenure,
        avg_gap_days=sum(gaps) / len(gaps) if gaps else 0.0,
    )


def _parse_flag(text: str, line_number: int, column: str) -> bool:
    if text == "0":
        return False
    if text == "1":
        return True
    raise EventParseError(line_number, f"bad flag value {text!r} in column {column!r}")


def read_events_csv(path) -> list[EventRecord]:
    """Read an event CSV (see EVENT_CSV_HEADER); raises EventParseError
    with the offending file line number on malformed input."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EventParseError(1, "empty file, header required") from None
        if header != EVENT_CSV_HEADER:
            raise EventParseError(1, f"bad header {header!r}")
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(EVENT_CSV_HEADER):
                raise EventParseError(
                    line_number, f"expected {len(EVENT_CSV_HEADER)} columns, got {len(row)}"
                )
            try:
                day = date.fromisoformat(row[1])
            except ValueError:
                raise EventParseError(line_number, f"malformed date {row[1]!r}") from None
            try:
                entry = EntryType(row[2])
            except ValueError:
                raise EventParseError(line_number, f"unknown entry_type {row[2]!r}") from None
            flags = tuple(
                _parse_flag(cell, line_number, EVENT_CSV_HEADER[3 + i])
                for i, cell in enumerate(row[3:])
            )
            records.append(EventRecord(row[0], day, entry, flags))
    return records


def write_events_csv(path, events: Iterable[EventRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EVENT_CSV_HEADER)
        for ev in events:
            writer.writerow(
                [ev.client_id, ev.day.isoformat(), ev.entry_type.value]
                + [int(f) for f in ev.flags]
            )
