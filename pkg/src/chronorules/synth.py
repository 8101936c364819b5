"""Seed-deterministic synthetic shelter cohorts.

Generates event streams whose per-class shelter-access statistics land
near published medians for chronic and non-chronic shelter populations
(median total stays ~671 vs ~5, chronic usage percentage ~40%), so the
full pipeline can run without any real client data.

Chronic clients open with a dense qualifying run of 180 stays inside a
365-day span, which guarantees the chronic definition is actually met;
the rest of their stays follow at a gap tuned to a drawn usage target.
Non-chronic clients draw a heavy-tailed stay count capped below every
chronic threshold, so truncation or placement can never flip a label.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, fields, replace
from datetime import date
from typing import Iterable

import numpy as np

from .events import (
    KEYWORD_NAMES,
    YEAR_WINDOW_STAYS,
    ClientTimeline,
    EntryType,
    EventRecord,
    build_timelines,
    client_stats,
    label_chronic,
)

DEFAULT_SEED = 20080701

# config-file spellings for the keyword categories, in KEYWORD_NAMES order
KEYWORD_CONFIG_KEYS = (
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
)

_DEFAULT_KW_CHRONIC = (0.05, 0.03, 0.04, 0.05, 0.05, 0.02, 0.05, 0.04, 0.01, 0.06)
_DEFAULT_KW_NONCHRONIC = (0.03, 0.01, 0.03, 0.03, 0.03, 0.01, 0.02, 0.03, 0.02, 0.04)


@dataclass(frozen=True)
class CohortConfig:
    population_size: int = 2000
    chronic_fraction: float = 0.099
    study_start: date = date(2008, 7, 1)
    study_span_days: int = 4200
    seed: int = DEFAULT_SEED

    # chronic stay process
    chronic_median_stays: float = 671.0
    chronic_stays_sigma: float = 0.9
    chronic_usage_low: float = 0.22
    chronic_usage_high: float = 0.62
    chronic_burst_skip_max: float = 0.35  # P(2-day gap) cap inside the qualifying run

    # non-chronic stay process
    nonchronic_median_stays: float = 5.0
    nonchronic_stays_sigma: float = 2.4
    nonchronic_max_stays: int = 170  # below both chronic thresholds
    nonchronic_gap_median: float = 8.0
    nonchronic_gap_sigma: float = 1.0
    nonchronic_heavy_threshold: int = 60
    nonchronic_heavy_gap_low: float = 1.1
    nonchronic_heavy_gap_high: float = 2.5

    # auxiliary event rates per stay day
    log_rate: float = 0.30
    bar_rate_chronic: float = 0.008
    bar_rate_nonchronic: float = 0.06
    counsel_rate_chronic: float = 0.02
    counsel_rate_nonchronic: float = 0.10

    # per-event keyword flag probabilities, KEYWORD_NAMES order
    keyword_probs_chronic: tuple[float, ...] = _DEFAULT_KW_CHRONIC
    keyword_probs_nonchronic: tuple[float, ...] = _DEFAULT_KW_NONCHRONIC

    def validate(self) -> None:
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.study_span_days < 365:
            raise ValueError("study_span_days must be >= 365")
        if not 0.0 <= self.chronic_fraction <= 1.0:
            raise ValueError("chronic_fraction must lie in [0, 1]")
        rates = (
            self.log_rate,
            self.bar_rate_chronic,
            self.bar_rate_nonchronic,
            self.counsel_rate_chronic,
            self.counsel_rate_nonchronic,
            *self.keyword_probs_chronic,
            *self.keyword_probs_nonchronic,
        )
        if any(r < 0 for r in rates):
            raise ValueError("event rates must be >= 0")
        if len(self.keyword_probs_chronic) != len(KEYWORD_NAMES):
            raise ValueError("keyword_probs_chronic must have 10 entries")
        if len(self.keyword_probs_nonchronic) != len(KEYWORD_NAMES):
            raise ValueError("keyword_probs_nonchronic must have 10 entries")


def load_cohort_config(path) -> CohortConfig:
    """Read a flat `key = value` config file ('#' comments allowed).

    Keys are CohortConfig field names; keyword probabilities use
    kw_<category>_chronic / kw_<category>_nonchronic (for example
    kw_violence_chronic = 0.05).
    """
    scalar_fields = {
        f.name: f.type
        for f in fields(CohortConfig)
        if not f.name.startswith("keyword_probs")
    }
    overrides: dict = {}
    kw_chronic = list(_DEFAULT_KW_CHRONIC)
    kw_nonchronic = list(_DEFAULT_KW_NONCHRONIC)
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in text.split("=", 1))
            value = value.strip("\"'")
            if key.startswith("kw_"):
                stem = key[3:]
                for i, cat in enumerate(KEYWORD_CONFIG_KEYS):
                    if stem == f"{cat}_chronic":
                        kw_chronic[i] = float(value)
                        break
                    if stem == f"{cat}_nonchronic":
                        kw_nonchronic[i] = float(value)
                        break
                else:
                    raise ValueError(f"{path}:{lineno}: unknown keyword key {key!r}")
                continue
            if key not in scalar_fields:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            kind = scalar_fields[key]
            if "date" in str(kind):
                overrides[key] = date.fromisoformat(value)
            elif "int" in str(kind):
                overrides[key] = int(value)
            elif "float" in str(kind):
                overrides[key] = float(value)
            else:
                overrides[key] = value
    cfg = CohortConfig(
        keyword_probs_chronic=tuple(kw_chronic),
        keyword_probs_nonchronic=tuple(kw_nonchronic),
        **overrides,
    )
    cfg.validate()
    return cfg


def _chronic_stay_offsets(rng: np.random.Generator, cfg: CohortConfig) -> np.ndarray:
    """Day offsets of one chronic client's stays, relative to their first stay."""
    total = int(round(rng.lognormal(np.log(cfg.chronic_median_stays), cfg.chronic_stays_sigma)))
    total = max(total, YEAR_WINDOW_STAYS + 20)
    skip_p = rng.uniform(0.0, cfg.chronic_burst_skip_max)
    # qualifying run: 180 stays with 1- or 2-day spacing, total span < 365
    burst_gaps = (rng.random(YEAR_WINDOW_STAYS - 1) < skip_p).astype(np.int64) + 1
    burst = np.concatenate([[0], np.cumsum(burst_gaps)])
    rest = total - YEAR_WINDOW_STAYS
    usage = rng.uniform(cfg.chronic_usage_low, cfg.chronic_usage_high)
    tail_gap = (total / usage - burst[-1]) / max(rest, 1)
    tail_gap = float(np.clip(tail_gap, 1.05, 45.0))
    tail_gaps = rng.geometric(1.0 / tail_gap, size=rest)
    return np.concatenate([burst, burst[-1] + np.cumsum(tail_gaps)])


def _nonchronic_stay_offsets(rng: np.random.Generator, cfg: CohortConfig) -> np.ndarray:
    total = int(round(rng.lognormal(np.log(cfg.nonchronic_median_stays), cfg.nonchronic_stays_sigma)))
    total = int(np.clip(total, 1, cfg.nonchronic_max_stays))
    if total == 1:
        return np.zeros(1, dtype=np.int64)
    if total > cfg.nonchronic_heavy_threshold:
        gap = rng.uniform(cfg.nonchronic_heavy_gap_low, cfg.nonchronic_heavy_gap_high)
    else:
        gap = rng.lognormal(np.log(cfg.nonchronic_gap_median), cfg.nonchronic_gap_sigma)
        gap = float(np.clip(gap, 1.05, 120.0))
    gaps = rng.geometric(1.0 / gap, size=total - 1)
    return np.concatenate([[0], np.cumsum(gaps)])


def _place_stays(rng: np.random.Generator, offsets: np.ndarray, span_days: int) -> np.ndarray:
    """Fit the stay pattern into the study span with a uniform start day."""
    offsets = offsets[offsets <= span_days - 2]
    tenure = int(offsets[-1]) + 1
    start = int(rng.integers(0, span_days - tenure + 1))
    return start + offsets


def _emit_client_events(
    rng: np.random.Generator,
    cfg: CohortConfig,
    client_id: str,
    stay_ords: np.ndarray,
    chronic: bool,
) -> list[EventRecord]:
    n = len(stay_ords)
    bar_rate = cfg.bar_rate_chronic if chronic else cfg.bar_rate_nonchronic
    counsel_rate = cfg.counsel_rate_chronic if chronic else cfg.counsel_rate_nonchronic
    log_hits = rng.random(n) < cfg.log_rate
    bar_hits = rng.random(n) < bar_rate
    counsel_hits = rng.random(n) < counsel_rate

    day_entries: list[tuple[int, EntryType]] = []
    for i, o in enumerate(stay_ords):
        day_entries.append((int(o), EntryType.SLEEP))
        if log_hits[i]:
            day_entries.append((int(o), EntryType.LOG))
        if bar_hits[i]:
            day_entries.append((int(o), EntryType.BAR))
        if counsel_hits[i]:
            day_entries.append((int(o), EntryType.COUNSEL))

    probs = cfg.keyword_probs_chronic if chronic else cfg.keyword_probs_nonchronic
    flag_draws = rng.random((len(day_entries), len(KEYWORD_NAMES))) < np.asarray(probs)
    return [
        EventRecord(client_id, date.fromordinal(o), entry, tuple(bool(b) for b in flag_draws[i]))
        for i, (o, entry) in enumerate(day_entries)
    ]


def generate_cohort(config: CohortConfig) -> list[EventRecord]:
    """Deterministic event stream, sorted by (client_id, date)."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.population_size
    n_chronic = round(n * config.chronic_fraction)
    is_chronic = np.zeros(n, dtype=bool)
    is_chronic[rng.permutation(n)[:n_chronic]] = True

    start_ord = config.study_start.toordinal()
    events: list[EventRecord] = []
    for i in range(n):
        client_id = f"C{i:05d}"
        if is_chronic[i]:
            offsets = _chronic_stay_offsets(rng, config)
        else:
            offsets = _nonchronic_stay_offsets(rng, config)
        stay_ords = start_ord + _place_stays(rng, offsets, config.study_span_days)
        events.extend(_emit_client_events(rng, config, client_id, stay_ords, is_chronic[i]))
    return events


def _nearest_rank(sorted_values, pct: float):
    n = len(sorted_values)
    rank = max(1, int(np.ceil(pct / 100.0 * n)))
    return sorted_values[rank - 1]


def summarize(values) -> dict[str, float]:
    """Average, median, and nearest-rank 10th/90th percentiles."""
    if not values:
        raise ValueError("no values to summarize")
    ordered = sorted(values)
    return {
        "average": float(np.mean(ordered)),
        "median": float(statistics.median(ordered)),
        "p10": float(_nearest_rank(ordered, 10)),
        "p90": float(_nearest_rank(ordered, 90)),
    }


STAT_FIELDS = ("total_stays", "total_episodes", "tenure_days", "usage_pct", "avg_gap_days")


def describe_cohort(events: Iterable[EventRecord]) -> dict:
    """Per-class summaries of the shelter-access statistics.

    Clients with no stay days are excluded (their statistics are
    undefined) but counted in the returned client tallies.
    """
    timelines = build_timelines(events)
    if not timelines:
        raise ValueError("no events to describe")
    groups: dict[str, list] = {"chronic": [], "non_chronic": []}
    skipped = 0
    for tl in timelines.values():
        if not tl.stay_dates:
            skipped += 1
            continue
        label = label_chronic(tl.stay_dates)
        key = "chronic" if label.is_chronic else "non_chronic"
        groups[key].append(client_stats(tl.stay_dates))
    out: dict = {"clients_without_stays": skipped}
    for key, stats_list in groups.items():
        if not stats_list:
            out[key] = {"client_count": 0}
            continue
        section: dict = {"client_count": len(stats_list)}
        for field_name in STAT_FIELDS:
            section[field_name] = summarize([getattr(s, field_name) for s in stats_list])
        out[key] = section
    return out


def timelines_from_config(config: CohortConfig) -> dict[str, ClientTimeline]:
    return build_timelines(generate_cohort(config))


def config_with(config: CohortConfig, **changes) -> CohortConfig:
    cfg = replace(config, **changes)
    cfg.validate()
    return cfg
