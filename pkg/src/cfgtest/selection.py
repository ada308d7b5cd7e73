"""Incremental configuration testing: pick the tests a config diff can affect."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .coverage import CoverageMap, dependents_closure
from .harness import ConcretizationPolicy, TestCase, run_suite
from .model import ConfigDiff, ConfigStore, ParamRegistry
from .sandbox import SandboxSpec


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[str, ...]
    affected_params: frozenset[str]
    reduction: float  # selected / total

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "selected": list(self.selected),
            "affected_params": sorted(self.affected_params),
            "reduction": self.reduction,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def select_tests(
    diff: ConfigDiff,
    covmap: CoverageMap,
    registry: ParamRegistry,
    suite_order: Sequence[str],
) -> SelectionResult:
    """Tests covering any parameter in the dependency closure of the diff.

    Removed keys count as changed. Tests missing from ``covmap.tests`` have no
    recorded trace and are selected whenever the diff is non-empty.
    """
    affected = dependents_closure(diff.keys(), registry)
    wanted: set[str] = set()
    for pid in affected:
        wanted |= covmap.tests_for(pid)
    if affected:
        known = set(covmap.tests)
        wanted |= {t for t in suite_order if t not in known}
    selected = tuple(t for t in suite_order if t in wanted)
    total = len(suite_order)
    return SelectionResult(selected, frozenset(affected), len(selected) / total if total else 0.0)


def is_stale(covmap: CoverageMap, suite_order: Iterable[str]) -> bool:
    """True when the map was built from a different set of test ids."""
    return set(covmap.tests) != set(suite_order)


def selection_oracle(
    tests: Sequence[TestCase],
    old_conf: ConfigStore,
    new_conf: ConfigStore,
    policy: ConcretizationPolicy,
    registry: ParamRegistry,
    sandbox: SandboxSpec | None = None,
    *,
    pins: Mapping[str, Iterable[str]] | None = None,
    timeout_s: float = 30.0,
) -> set[str]:
    """Brute force: run the whole suite under both configs, diff the verdicts."""
    before = run_suite(tests, old_conf, policy, registry, sandbox, pins=pins, timeout_s=timeout_s)
    after = run_suite(tests, new_conf, policy, registry, sandbox, pins=pins, timeout_s=timeout_s)
    old_status, new_status = before.statuses(), after.statuses()
    return {t for t in old_status if old_status[t] != new_status[t]}
