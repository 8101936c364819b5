"""Exhaustive OPUS-style search for the best conjunctive rule under F-beta.

Conjunctions are enumerated over a set-enumeration tree (children extend
only with larger feature indices, so each feature set is visited once).
An admissible optimistic bound (the score with false positives forced
to zero) prunes subtrees that cannot strictly beat the incumbent, which
keeps the search exact including tie-breaks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .features import CoverageTable, Feature


class NoQualifyingRuleError(LookupError):
    """No conjunction covers a single positive example."""


@dataclass(frozen=True)
class SearchConfig:
    beta2: float = 0.25
    max_rule_len: int = 2
    max_set_size: int = 1

    def __post_init__(self):
        if self.beta2 < 0:
            raise ValueError("beta2 must be >= 0")
        if self.max_rule_len < 1:
            raise ValueError("max_rule_len must be >= 1")
        if self.max_set_size < 1:
            raise ValueError("max_set_size must be >= 1")


@dataclass(frozen=True)
class MetricCounts:
    tp: int
    fp: int
    pos_total: int
    neg_total: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / self.pos_total


@dataclass(frozen=True)
class Rule:
    """Conjunction of threshold features with counts cached at learn time."""

    conjuncts: tuple[Feature, ...]
    feature_indices: tuple[int, ...]
    counts: MetricCounts

    def covers(self, values) -> bool:
        return all(f.passes(values[f.attr_index]) for f in self.conjuncts)


@dataclass
class SearchStats:
    nodes_evaluated: int = 0


def fbeta_counts(tp: int, fp: int, pos_total: int, beta2: float) -> float:
    """F-beta from raw counts: (1 + b) * tp / (b * pos_total + tp + fp)."""
    if pos_total <= 0:
        raise ValueError("pos_total must be >= 1")
    if tp == 0:
        return 0.0
    return (1.0 + beta2) * tp / (beta2 * pos_total + tp + fp)


def fbeta(counts: MetricCounts, beta2: float) -> float:
    return fbeta_counts(counts.tp, counts.fp, counts.pos_total, beta2)


def optimistic_bound(tp: int, pos_total: int, beta2: float) -> float:
    """Best score any specialization could reach: fp driven to zero.

    Specializing a conjunction never increases tp, and the bound is
    monotone in tp, so it is admissible for subtree pruning.
    """
    if tp == 0:
        return 0.0
    return (1.0 + beta2) * tp / (beta2 * pos_total + tp)


def search(
    coverage: CoverageTable,
    config: SearchConfig,
    *,
    active_mask: int | None = None,
    use_bound: bool = True,
    stats: SearchStats | None = None,
) -> Rule:
    """Best conjunction of 1..max_rule_len distinct features by F-beta.

    Ties break toward shorter rules, then the lexicographically smallest
    feature-index sequence, so the result is independent of expansion
    order.  Pruning uses strict inequality (bound < incumbent score):
    pruning at equality could discard a rule that ties the incumbent but
    wins the canonical tie-break.

    Raises NoQualifyingRuleError when no conjunction covers a positive.
    """
    n_feats = len(coverage.features)
    if n_feats == 0:
        raise ValueError("coverage table has no features")
    root = coverage.full_mask if active_mask is None else active_mask & coverage.full_mask
    labels = coverage.labels_mask & root
    pos_total = labels.bit_count()
    if pos_total == 0:
        raise ValueError("no positive examples in search scope")
    neg_total = root.bit_count() - pos_total

    beta2 = config.beta2
    cols = coverage.columns
    if stats is None:
        stats = SearchStats()

    best_score = 0.0
    best: tuple[tuple[int, ...], int, int] | None = None  # (indices, tp, fp)

    def visit(prefix: tuple[int, ...], mask: int, start: int) -> None:
        nonlocal best_score, best
        for j in range(start, n_feats):
            child = mask & cols[j]
            stats.nodes_evaluated += 1
            tp = (child & labels).bit_count()
            if tp == 0:
                continue
            fp = child.bit_count() - tp
            indices = prefix + (j,)
            score = fbeta_counts(tp, fp, pos_total, beta2)
            if best is None or score > best_score or (
                score == best_score
                and (len(indices), indices) < (len(best[0]), best[0])
            ):
                best_score, best = score, (indices, tp, fp)
            if len(indices) >= config.max_rule_len:
                continue
            if child == mask:
                continue  # feature added no constraint; subtree is redundant
            if use_bound and optimistic_bound(tp, pos_total, beta2) < best_score:
                continue
            visit(indices, child, j + 1)

    visit((), root, 0)
    if best is None:
        raise NoQualifyingRuleError("no rule covers any positive example")
    indices, tp, fp = best
    return Rule(
        conjuncts=tuple(coverage.features[i] for i in indices),
        feature_indices=indices,
        counts=MetricCounts(tp=tp, fp=fp, pos_total=pos_total, neg_total=neg_total),
    )
