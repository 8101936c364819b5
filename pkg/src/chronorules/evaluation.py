"""Stratified cross-validation and the monthly triage replay.

The replay walks the meeting schedule: at each meeting every active,
not-yet-detected client who has been in the system at least w days gets
their last-w-days counts scored against the rule set.  Time to
identification (TTI) runs from a chronic client's first stay to their
detection meeting, or to the day they first satisfy the chronic
definition if the rules never fire.
"""

from __future__ import annotations

import csv
import json
import statistics
from bisect import bisect_left
from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .events import ClientTimeline
from .features import CoverageTable
from .rules import RuleSet, ruleset_mask
from .search import SearchConfig
from .tables import ClientWindowIndex, data_span, meeting_schedule


class WindowMismatchError(ValueError):
    """Rule set was learned for a different window size."""


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of_row: np.ndarray  # (N,) int
    seed: int

    def mask(self, fold: int) -> int:
        bits = 0
        for row in np.flatnonzero(self.fold_of_row == fold):
            bits |= 1 << int(row)
        return bits


def stratified_folds(coverage: CoverageTable, k: int, seed: int) -> FoldAssignment:
    """Shuffle each class with the seed, then deal rows round-robin."""
    if k < 2:
        raise ValueError("k must be >= 2")
    n = coverage.n_rows
    labels = np.array(
        [bool(coverage.labels_mask >> r & 1) for r in range(n)], dtype=bool
    )
    rng = np.random.default_rng(seed)
    fold_of_row = np.empty(n, dtype=np.int64)
    for cls in (True, False):
        rows = np.flatnonzero(labels == cls)
        if len(rows) < k:
            raise ValueError(
                f"class with {len(rows)} rows cannot be split into {k} folds"
            )
        rows = rows[rng.permutation(len(rows))]
        for i, row in enumerate(rows):
            fold_of_row[row] = i % k
    return FoldAssignment(k=k, fold_of_row=fold_of_row, seed=seed)


@dataclass(frozen=True)
class CrossValResult:
    precision: float  # unweighted mean over folds
    recall: float
    fold_precisions: tuple[float, ...]
    fold_recalls: tuple[float, ...]


def cross_validate(
    coverage: CoverageTable,
    config: SearchConfig,
    k: int = 10,
    seed: int = 0,
) -> CrossValResult:
    """Learn on k-1 folds, score on the held-out fold, average the folds.

    Fold precision is defined as 0 when a rule set covers no held-out
    rows at all.
    """
    from .rules import learn

    folds = stratified_folds(coverage, k, seed)
    full = coverage.full_mask
    precisions, recalls = [], []
    for f in range(k):
        test_mask = folds.mask(f)
        train_mask = full & ~test_mask
        rs = learn(coverage, config, active_mask=train_mask)
        covered = ruleset_mask(rs, coverage) & test_mask
        tp = (covered & coverage.labels_mask).bit_count()
        predicted = covered.bit_count()
        pos = (test_mask & coverage.labels_mask).bit_count()
        precisions.append(tp / predicted if predicted else 0.0)
        recalls.append(tp / pos)
    return CrossValResult(
        precision=float(np.mean(precisions)),
        recall=float(np.mean(recalls)),
        fold_precisions=tuple(precisions),
        fold_recalls=tuple(recalls),
    )


@dataclass(frozen=True)
class ClientOutcome:
    client_id: str
    chronic: bool
    detected: bool
    detection_date: date | None
    tti_days: int | None  # defined for chronic clients only


@dataclass
class ReplayReport:
    window_days: int
    tp: int
    fn: int
    fp: int
    tn: int
    outcomes: list[ClientOutcome]
    median_tti_days: float | None
    meetings: list[date]
    triage_list_sizes: list[int]
    clients_per_month: float

    @property
    def population(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def to_json(self) -> str:
        doc = {
            "window_days": self.window_days,
            "tp": self.tp,
            "fn": self.fn,
            "fp": self.fp,
            "tn": self.tn,
            "population": self.population,
            "median_tti_days": self.median_tti_days,
            "n_meetings": len(self.meetings),
            "clients_per_month": round(self.clients_per_month, 4),
            "triage_list_sizes": self.triage_list_sizes,
        }
        return json.dumps(doc, indent=2) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["client_id", "chronic", "detected", "detection_date", "tti_days"])
            for o in self.outcomes:
                writer.writerow(
                    [
                        o.client_id,
                        int(o.chronic),
                        int(o.detected),
                        o.detection_date.isoformat() if o.detection_date else "",
                        o.tti_days if o.tti_days is not None else "",
                    ]
                )


def replay(
    timelines: Sequence[ClientTimeline],
    ruleset: RuleSet,
    window_days: int,
    *,
    schedule: Sequence[date] | None = None,
) -> ReplayReport:
    """Monthly triage simulation over the full population.

    A client is evaluated at a meeting once they have been in the system
    at least window_days and were active in the prior 30 days; the first
    rule match is terminal for that client.
    """
    from .rules import apply as apply_rules
    from .tables import DEFAULT_ATTRIBUTES

    if ruleset.window_days != window_days:
        raise WindowMismatchError(
            f"rule set was learned for w={ruleset.window_days}, replay requested w={window_days}"
        )
    if schedule is None:
        start, end = data_span(timelines)
        schedule = meeting_schedule(start, end)
    meeting_ords = [m.toordinal() for m in schedule]
    attr_cols = [DEFAULT_ATTRIBUTES.index(name) for name in ruleset.attributes]

    outcomes = []
    detections_per_meeting = [0] * len(schedule)
    tp = fn = fp = tn = 0
    tti_values = []
    for tl in sorted(timelines, key=lambda t: t.client_id):
        index = ClientWindowIndex(tl)
        detection_date = None
        if index.first_event_ord is not None:
            start_pos = bisect_left(meeting_ords, index.first_event_ord + window_days)
            for pos in range(start_pos, len(meeting_ords)):
                mo = meeting_ords[pos]
                if mo - index.last_event_ord > 30:
                    break  # client can never be active again
                if not index.active(mo):
                    continue
                counts = index.window_counts(mo, window_days)[attr_cols]
                if apply_rules(ruleset, counts):
                    detection_date = schedule[pos]
                    detections_per_meeting[pos] += 1
                    break
        detected = detection_date is not None
        tti = None
        if index.chronic:
            if detected:
                tti = (detection_date - index.first_stay).days
            else:
                tti = (index.first_qualifying_day - index.first_stay).days
            tti_values.append(tti)
            if detected:
                tp += 1
            else:
                fn += 1
        else:
            if detected:
                fp += 1
            else:
                tn += 1
        outcomes.append(
            ClientOutcome(
                client_id=tl.client_id,
                chronic=index.chronic,
                detected=detected,
                detection_date=detection_date,
                tti_days=tti,
            )
        )

    return ReplayReport(
        window_days=window_days,
        tp=tp,
        fn=fn,
        fp=fp,
        tn=tn,
        outcomes=outcomes,
        median_tti_days=float(statistics.median(tti_values)) if tti_values else None,
        meetings=list(schedule),
        triage_list_sizes=detections_per_meeting,
        clients_per_month=(tp + fp) / len(schedule) if schedule else 0.0,
    )


def baseline_tti(timelines: Sequence[ClientTimeline]) -> float:
    """Median days from first stay to first satisfying the chronic definition."""
    from .events import label_chronic

    delays = []
    for tl in timelines:
        label = label_chronic(tl.stay_dates)
        if label.is_chronic:
            delays.append((label.first_qualifying_day - tl.stay_dates[0]).days)
    if not delays:
        raise ValueError("no chronic clients in the population")
    return float(statistics.median(delays))
