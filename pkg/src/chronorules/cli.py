"""Command-line pipeline: gen, describe, tabulate, learn, crossval, replay, sweep.

Every command is deterministic given its inputs and seed; reruns produce
byte-identical output files.  Exit codes: 1 for input/parse problems,
2 for degenerate data (single-class cohort) or mismatched rule windows.
"""

from __future__ import annotations

import csv
import sys
from dataclasses import replace

import click

from . import evaluation, features, rules, search, synth, tables
from .events import EventParseError, build_timelines, read_events_csv, write_events_csv

WINDOW_CHOICES = [str(w) for w in tables.WINDOW_SIZES]


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_timelines(events_path):
    try:
        events = read_events_csv(events_path)
    except EventParseError as exc:
        _fail(str(exc), 1)
    except OSError as exc:
        _fail(str(exc), 1)
    if not events:
        _fail("event file contains no rows", 1)
    return list(build_timelines(events).values())


def _coverage_for(timelines, window, attrs):
    schema = tables.schema_by_name(attrs)
    table = tables.build_attribute_table(timelines, window, schema)
    try:
        feats = features.generate_features(table)
    except features.OneClassTableError as exc:
        _fail(str(exc), 2)
    return table, features.build_coverage(table, feats)


@click.group()
def main():
    """Learn and evaluate threshold rules for early chronic-client triage."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def gen(config_path, seed, out_path):
    """Generate a synthetic event CSV from a cohort config."""
    try:
        cfg = synth.load_cohort_config(config_path) if config_path else synth.CohortConfig()
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        cfg.validate()
        events = synth.generate_cohort(cfg)
    except ValueError as exc:
        _fail(str(exc), 1)
    write_events_csv(out_path, events)
    click.echo(f"seed: {cfg.seed}")
    click.echo(f"clients: {cfg.population_size}")
    click.echo(f"events: {len(events)}")
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--events", "events_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False))
def describe(events_path, out_path):
    """Per-class shelter-access statistics for an event CSV."""
    timelines = _load_timelines(events_path)
    summary = synth.describe_cohort(ev for tl in timelines for ev in tl.events)
    rows = []
    for group in ("chronic", "non_chronic"):
        section = summary[group]
        click.echo(f"{group}: {section['client_count']} clients")
        for stat in synth.STAT_FIELDS:
            if stat not in section:
                continue
            s = section[stat]
            click.echo(
                f"  {stat:<15} avg {s['average']:10.2f}  median {s['median']:10.2f}"
                f"  p10 {s['p10']:10.2f}  p90 {s['p90']:10.2f}"
            )
            rows.append([group, stat, s["average"], s["median"], s["p10"], s["p90"]])
    if out_path:
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["class", "stat", "average", "median", "p10", "p90"])
            writer.writerows(rows)
        click.echo(f"wrote {out_path}")


@main.command()
@click.option("--events", "events_path", required=True, type=click.Path(dir_okay=False))
@click.option("--window", type=click.Choice(WINDOW_CHOICES), default="30", show_default=True)
@click.option("--attrs", default="all", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def tabulate(events_path, window, attrs, out_path):
    """Write the per-client attribute summary table for one window size."""
    timelines = _load_timelines(events_path)
    schema = tables.schema_by_name(attrs)
    table = tables.build_attribute_table(timelines, int(window), schema)
    tables.write_attribute_table_csv(out_path, table)
    click.echo(f"rows: {table.n_rows}")
    click.echo(f"positives: {int(table.labels.sum())}")
    click.echo(f"wrote {out_path}")


def _search_config(beta2, max_rule_len, max_set_size):
    try:
        return search.SearchConfig(
            beta2=beta2, max_rule_len=max_rule_len, max_set_size=max_set_size
        )
    except ValueError as exc:
        _fail(str(exc), 1)


@main.command()
@click.option("--events", "events_path", required=True, type=click.Path(dir_okay=False))
@click.option("--window", type=click.Choice(WINDOW_CHOICES), default="30", show_default=True)
@click.option("--attrs", default="core", show_default=True)
@click.option("--beta2", type=float, default=0.25, show_default=True)
@click.option("--max-rule-len", type=int, default=2, show_default=True)
@click.option("--max-set-size", type=int, default=1, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def learn(events_path, window, attrs, beta2, max_rule_len, max_set_size, out_path):
    """Learn a rule set on the full attribute table and write it as JSON."""
    config = _search_config(beta2, max_rule_len, max_set_size)
    timelines = _load_timelines(events_path)
    _, coverage = _coverage_for(timelines, int(window), attrs)
    try:
        ruleset = rules.learn(coverage, config)
    except (ValueError, search.NoQualifyingRuleError) as exc:
        _fail(str(exc), 2)
    with open(out_path, "w") as fh:
        fh.write(rules.to_json(ruleset))
    counts = ruleset.counts
    click.echo(f"rule: {ruleset.describe()}")
    click.echo(f"training precision: {counts.precision:.4f}")
    click.echo(f"training recall: {counts.recall:.4f}")
    click.echo(f"training fbeta: {search.fbeta(counts, beta2):.4f}")
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--events", "events_path", required=True, type=click.Path(dir_okay=False))
@click.option("--window", type=click.Choice(WINDOW_CHOICES), default="30", show_default=True)
@click.option("--attrs", default="core", show_default=True)
@click.option("--beta2", type=float, default=0.25, show_default=True)
@click.option("--max-rule-len", type=int, default=2, show_default=True)
@click.option("--max-set-size", type=int, default=1, show_default=True)
@click.option("--folds", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=synth.DEFAULT_SEED, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False))
def crossval(events_path, window, attrs, beta2, max_rule_len, max_set_size, folds, seed, out_path):
    """Stratified k-fold cross-validation of the learner."""
    config = _search_config(beta2, max_rule_len, max_set_size)
    timelines = _load_timelines(events_path)
    _, coverage = _coverage_for(timelines, int(window), attrs)
    try:
        result = evaluation.cross_validate(coverage, config, k=folds, seed=seed)
    except ValueError as exc:
        _fail(str(exc), 2)
    click.echo(f"seed: {seed}")
    for i, (p, r) in enumerate(zip(result.fold_precisions, result.fold_recalls)):
        click.echo(f"fold {i}: precision {p:.4f} recall {r:.4f}")
    click.echo(f"mean precision: {result.precision:.4f}")
    click.echo(f"mean recall: {result.recall:.4f}")
    if out_path:
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["fold", "precision", "recall"])
            for i, (p, r) in enumerate(zip(result.fold_precisions, result.fold_recalls)):
                writer.writerow([i, f"{p:.4f}", f"{r:.4f}"])
            writer.writerow(["mean", f"{result.precision:.4f}", f"{result.recall:.4f}"])
        click.echo(f"wrote {out_path}")


@main.command()
@click.option("--events", "events_path", required=True, type=click.Path(dir_okay=False))
@click.option("--rules", "rules_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--window", type=click.Choice(WINDOW_CHOICES), default="30", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def replay(events_path, rules_path, window, out_path):
    """Run the monthly triage replay; writes a JSON report and per-client CSV."""
    with open(rules_path) as fh:
        ruleset = rules.from_json(fh.read())
    timelines = _load_timelines(events_path)
    try:
        report = evaluation.replay(timelines, ruleset, int(window))
    except evaluation.WindowMismatchError as exc:
        _fail(str(exc), 2)
    with open(out_path, "w") as fh:
        fh.write(report.to_json())
    csv_path = str(out_path)
    csv_path = csv_path[: -len(".json")] + ".csv" if csv_path.endswith(".json") else csv_path + ".csv"
    report.write_csv(csv_path)
    click.echo(f"tp: {report.tp}  fn: {report.fn}  fp: {report.fp}  tn: {report.tn}")
    click.echo(f"median tti days: {report.median_tti_days}")
    click.echo(f"clients per month: {report.clients_per_month:.4f}")
    click.echo(f"wrote {out_path}")
    click.echo(f"wrote {csv_path}")


@main.command()
@click.option("--events", "events_path", required=True, type=click.Path(dir_okay=False))
@click.option("--window", "windows", default="30,60,90,120", show_default=True,
              help="Comma-separated window sizes.")
@click.option("--beta2", "beta2s", default="0.25", show_default=True,
              help="Comma-separated beta^2 values.")
@click.option("--attrs", default="core", show_default=True)
@click.option("--max-rule-len", type=int, default=2, show_default=True)
@click.option("--max-set-size", type=int, default=1, show_default=True)
@click.option("--folds", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=synth.DEFAULT_SEED, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def sweep(events_path, windows, beta2s, attrs, max_rule_len, max_set_size, folds, seed, out_path):
    """Cross-validated metrics plus the full-table rule for each grid point."""
    try:
        window_list = [int(w) for w in windows.split(",") if w.strip()]
        beta2_list = [float(b) for b in beta2s.split(",") if b.strip()]
    except ValueError as exc:
        _fail(f"bad grid value: {exc}", 1)
    if not window_list or not beta2_list:
        _fail("sweep grid is empty", 1)
    for w in window_list:
        if w not in tables.WINDOW_SIZES:
            _fail(f"window must be one of {tables.WINDOW_SIZES}, got {w}", 1)

    timelines = _load_timelines(events_path)
    click.echo(f"seed: {seed}")
    rows = []
    for w in window_list:
        _, coverage = _coverage_for(timelines, w, attrs)
        for b2 in beta2_list:
            config = _search_config(b2, max_rule_len, max_set_size)
            try:
                result = evaluation.cross_validate(coverage, config, k=folds, seed=seed)
                full_rules = rules.learn(coverage, config)
            except ValueError as exc:
                _fail(str(exc), 2)
            rows.append(
                [
                    w,
                    b2,
                    attrs,
                    max_rule_len,
                    max_set_size,
                    f"{result.precision:.4f}",
                    f"{result.recall:.4f}",
                    full_rules.describe(),
                ]
            )
            click.echo(
                f"w={w} beta2={b2} precision={result.precision:.4f} "
                f"recall={result.recall:.4f} rule={full_rules.describe()}"
            )
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["window_days", "beta2", "attrs", "max_rule_len", "max_set_size",
             "precision", "recall", "rule"]
        )
        writer.writerows(rows)
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
