"""Threshold features, bitset coverage tables, and attribute retention order.

A feature is a single threshold test (attribute >= t or attribute < t)
at a midpoint between adjacent observed values.  Only midpoints that
separate at least one positive from one negative example are kept, so
every emitted feature carries some signal.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .tables import AttributeSchema, AttributeSummaryTable


class Op(Enum):
    GE = ">="
    LT = "<"


class OneClassTableError(ValueError):
    """Attribute table with only one class; no features can discriminate."""


@dataclass(frozen=True, slots=True)
class Feature:
    attr_index: int  # column in the table's schema
    op: Op
    threshold: float

    def passes(self, value: float) -> bool:
        if self.op is Op.GE:
            return value >= self.threshold
        return value < self.threshold

    def describe(self, schema: AttributeSchema) -> str:
        return f"{schema.names[self.attr_index]} {self.op.value} {self.threshold:g}"


@dataclass
class CoverageTable:
    """Binary feature matrix stored as one bitmask int per feature.

    Bit r of columns[j] is 1 iff row r passes feature j; labels_mask has
    bit r set for positive rows.  Python ints give branch-free AND +
    popcount over all rows at once.
    """

    window_days: int
    schema: AttributeSchema
    features: list[Feature]
    columns: list[int]
    labels_mask: int
    n_rows: int

    @property
    def full_mask(self) -> int:
        return (1 << self.n_rows) - 1

    @property
    def pos_total(self) -> int:
        return self.labels_mask.bit_count()

    @property
    def neg_total(self) -> int:
        return self.n_rows - self.pos_total

    def conjunction_mask(self, feature_indices) -> int:
        mask = self.full_mask
        for j in feature_indices:
            mask &= self.columns[j]
        return mask


def _mask_from_bools(bits: np.ndarray) -> int:
    packed = np.packbits(bits.astype(np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def generate_features(table: AttributeSummaryTable) -> list[Feature]:
    """Discriminating threshold features for every attribute column.

    Candidate thresholds are midpoints between consecutive distinct
    values; a midpoint survives iff some positive and some negative
    value fall on opposite sides.  Each survivor yields a >= and a <
    feature.  Output order is canonical: attribute, then threshold,
    then >= before <.
    """
    labels = table.labels
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == len(labels):
        raise OneClassTableError("attribute table has a single class")

    feats: list[Feature] = []
    for k in range(len(table.schema)):
        col = table.counts[:, k]
        pos_vals = col[labels]
        neg_vals = col[~labels]
        pos_min, pos_max = pos_vals.min(), pos_vals.max()
        neg_min, neg_max = neg_vals.min(), neg_vals.max()
        distinct = np.unique(col)
        for a, b in zip(distinct, distinct[1:]):
            t = (float(a) + float(b)) / 2.0
            separates = (pos_min < t < neg_max) or (neg_min < t < pos_max)
            if separates:
                feats.append(Feature(k, Op.GE, t))
                feats.append(Feature(k, Op.LT, t))
    return feats


def build_coverage(table: AttributeSummaryTable, features: list[Feature]) -> CoverageTable:
    """Apply every feature to every row of the attribute table."""
    n_attrs = len(table.schema)
    columns = []
    for f in features:
        if not 0 <= f.attr_index < n_attrs:
            raise ValueError(f"feature references unknown attribute index {f.attr_index}")
        col = table.counts[:, f.attr_index]
        bits = col >= f.threshold if f.op is Op.GE else col < f.threshold
        columns.append(_mask_from_bools(bits))
    return CoverageTable(
        window_days=table.window_days,
        schema=table.schema,
        features=list(features),
        columns=columns,
        labels_mask=_mask_from_bools(table.labels),
        n_rows=len(table.labels),
    )


@dataclass(frozen=True)
class RetentionOrder:
    names: tuple[str, ...]  # most valuable first


def _abs_corr(x: np.ndarray, y: np.ndarray) -> float:
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return abs(float(np.corrcoef(x, y)[0, 1]))


def prune_attributes(table: AttributeSummaryTable) -> RetentionOrder:
    """Greedy correlation-based attribute ranking.

    Rounds: pair surviving attributes in decreasing pairwise |Pearson r|
    (each attribute in at most one pair per round; an odd leftover
    survives), discard the pair member less correlated with the label,
    repeat until none survive.  Retention order is the reverse discard
    order.  Zero-variance attributes are discarded first; correlation
    ties break on lexicographic attribute name.
    """
    names = table.schema.names
    if len(names) < 2:
        raise ValueError("need at least two attributes to rank")
    X = table.counts.astype(float)
    y = table.labels.astype(float)

    label_corr = {n: _abs_corr(X[:, i], y) for i, n in enumerate(names)}
    cross = {}
    for i, a in enumerate(names):
        for j in range(i + 1, len(names)):
            b = names[j]
            cross[(a, b)] = _abs_corr(X[:, i], X[:, j])

    discard_order: list[str] = []
    zero_var = sorted(n for i, n in enumerate(names) if X[:, i].std() == 0.0)
    discard_order.extend(zero_var)
    survivors = sorted(set(names) - set(zero_var))

    def pair_key(pair):
        return (-cross[pair], pair[0], pair[1])

    while survivors:
        if len(survivors) == 1:
            discard_order.append(survivors.pop())
            break
        pairs = sorted(
            ((a, b) for i, a in enumerate(survivors) for b in survivors[i + 1:]),
            key=pair_key,
        )
        taken: set[str] = set()
        round_losers = []
        for a, b in pairs:
            if a in taken or b in taken:
                continue
            taken.update((a, b))
            if label_corr[a] == label_corr[b]:
                round_losers.append(max(a, b))
            elif label_corr[a] < label_corr[b]:
                round_losers.append(a)
            else:
                round_losers.append(b)
        discard_order.extend(round_losers)
        survivors = sorted(set(survivors) - set(round_losers))

    return RetentionOrder(tuple(reversed(discard_order)))
