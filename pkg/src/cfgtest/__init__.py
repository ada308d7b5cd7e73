"""Configuration testing: run existing tests against the values you deploy."""

from .configio import load_registry, parse_properties, serialize_properties
from .coverage import CoverageMap, CoverageStats, build_coverage_map, coverage_stats, dependents_closure
from .errors import *  # noqa: F401,F403
from .harness import (
    AccessTrace,
    ConcretizationPolicy,
    Configuration,
    SuiteReport,
    TestCase,
    Verdict,
    classify_test,
    concretize,
    run_suite,
    run_test,
)
from .model import (
    ConfigDiff,
    ConfigStore,
    DependencyEdge,
    ParamRegistry,
    ParamSpec,
    ParamType,
    compute_diff,
    register_params,
    set_value,
    typed_get,
)
from .mutation import LabeledConfig, MutationOperator, generate_corpus, mutate
from .quality import QualityReport, Violation, baseline_validate, evaluate_quality
from .sandbox import FixtureFile, SandboxSpec
from .selection import SelectionResult, select_tests, selection_oracle

__version__ = "0.1.0"
