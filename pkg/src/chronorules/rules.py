"""Disjunctive rule sets built by a separate-and-conquer covering loop."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .features import CoverageTable, Feature, Op
from .search import (
    MetricCounts,
    NoQualifyingRuleError,
    Rule,
    SearchConfig,
    SearchStats,
    search,
)


@dataclass
class RuleSet:
    """Disjunction of conjunctive rules; a row is positive iff any rule covers it."""

    window_days: int
    attributes: tuple[str, ...]
    rules: list[Rule]
    counts: MetricCounts | None = None  # aggregate on the full training table

    def describe(self) -> str:
        parts = []
        for rule in self.rules:
            conj = " and ".join(
                f"{self.attributes[f.attr_index]} {f.op.value} {f.threshold:g}"
                for f in rule.conjuncts
            )
            parts.append(f"({conj})")
        return " or ".join(parts)


def learn(
    coverage: CoverageTable,
    config: SearchConfig,
    *,
    active_mask: int | None = None,
) -> RuleSet:
    """Covering loop: search a rule, drop every row it covers, repeat.

    Stops when all positives are covered, max_set_size rules are found,
    or no remaining rule covers a positive.  Aggregate counts are taken
    on the full (unreduced) training scope, since deployment applies all
    rules to all clients.
    """
    root = coverage.full_mask if active_mask is None else active_mask & coverage.full_mask
    labels_root = coverage.labels_mask & root
    if labels_root == 0:
        raise ValueError("no positive examples to learn from")

    remaining = root
    rules: list[Rule] = []
    while len(rules) < config.max_set_size and (remaining & coverage.labels_mask) != 0:
        try:
            rule = search(coverage, config, active_mask=remaining)
        except NoQualifyingRuleError:
            if not rules:
                raise
            break
        rules.append(rule)
        covered = coverage.conjunction_mask(rule.feature_indices)
        remaining &= ~covered

    union = 0
    for rule in rules:
        union |= coverage.conjunction_mask(rule.feature_indices)
    union &= root
    tp = (union & labels_root).bit_count()
    counts = MetricCounts(
        tp=tp,
        fp=union.bit_count() - tp,
        pos_total=labels_root.bit_count(),
        neg_total=root.bit_count() - labels_root.bit_count(),
    )
    return RuleSet(
        window_days=coverage.window_days,
        attributes=coverage.schema.names,
        rules=rules,
        counts=counts,
    )


def apply(ruleset: RuleSet, attribute_counts: Sequence[float]) -> bool:
    """Evaluate a rule set on one client's attribute-count vector."""
    if len(attribute_counts) != len(ruleset.attributes):
        raise ValueError(
            f"expected {len(ruleset.attributes)} counts, got {len(attribute_counts)}"
        )
    return any(rule.covers(attribute_counts) for rule in ruleset.rules)


def ruleset_mask(ruleset: RuleSet, coverage: CoverageTable) -> int:
    """Bitmask of rows covered by any rule, via the coverage bit columns."""
    union = 0
    for rule in ruleset.rules:
        union |= coverage.conjunction_mask(rule.feature_indices)
    return union


def to_json(ruleset: RuleSet) -> str:
    """Canonical JSON with stable key order; round-trips through from_json."""
    doc = {
        "window_days": ruleset.window_days,
        "attributes": list(ruleset.attributes),
        "rules": [
            {
                "conjuncts": [
                    {
                        "attr": ruleset.attributes[f.attr_index],
                        "op": f.op.value,
                        "threshold": float(f.threshold),
                    }
                    for f in rule.conjuncts
                ]
            }
            for rule in ruleset.rules
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def from_json(text: str) -> RuleSet:
    doc = json.loads(text)
    attributes = tuple(doc["attributes"])
    rules = []
    for spec in doc["rules"]:
        conjuncts = []
        for c in spec["conjuncts"]:
            try:
                attr_index = attributes.index(c["attr"])
            except ValueError:
                raise ValueError(f"conjunct references unknown attribute {c['attr']!r}") from None
            conjuncts.append(Feature(attr_index, Op(c["op"]), float(c["threshold"])))
        rules.append(
            Rule(
                conjuncts=tuple(conjuncts),
                feature_indices=(),
                counts=MetricCounts(0, 0, 1, 0),
            )
        )
    return RuleSet(
        window_days=int(doc["window_days"]),
        attributes=attributes,
        rules=rules,
        counts=None,
    )
