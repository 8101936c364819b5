"""chronorules: threshold rule-set learning for early identification of
chronic shelter clients, with a monthly triage replay evaluator."""

from .events import (
    ChronicLabel,
    ClientStats,
    ClientTimeline,
    EntryType,
    Episode,
    EventParseError,
    EventRecord,
    build_timelines,
    client_stats,
    is_active,
    label_chronic,
    read_events_csv,
    segment_episodes,
    segment_stays,
    write_events_csv,
)
from .evaluation import (
    CrossValResult,
    FoldAssignment,
    ReplayReport,
    WindowMismatchError,
    baseline_tti,
    cross_validate,
    replay,
    stratified_folds,
)
from .features import (
    CoverageTable,
    Feature,
    OneClassTableError,
    Op,
    RetentionOrder,
    build_coverage,
    generate_features,
    prune_attributes,
)
from .rules import RuleSet, apply, from_json, learn, to_json
from .search import (
    MetricCounts,
    NoQualifyingRuleError,
    Rule,
    SearchConfig,
    SearchStats,
    fbeta,
    fbeta_counts,
    optimistic_bound,
    search,
)
from .synth import (
    DEFAULT_SEED,
    CohortConfig,
    describe_cohort,
    generate_cohort,
    load_cohort_config,
)
from .tables import (
    AttributeSchema,
    AttributeSummaryTable,
    build_attribute_table,
    meeting_schedule,
    schema_by_name,
    write_attribute_table_csv,
)

__version__ = "0.1.0"
