"""Configuration coverage: which tests exercise the deployed value of each parameter."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping

from .harness import AccessTrace
from .model import ParamRegistry


@dataclass
class CoverageMap:
    """param -> set of test ids; ``tests`` is the suite the map was built from."""

    entries: dict[str, set[str]] = field(default_factory=dict)
    tests: list[str] = field(default_factory=list)

    def __getitem__(self, pid: str) -> set[str]:
        return self.entries.get(pid, set())

    def __contains__(self, pid: object) -> bool:
        return pid in self.entries

    def tests_for(self, pid: str) -> set[str]:
        return self.entries.get(pid, set())

    def params_for(self, test_id: str) -> set[str]:
        return {p for p, ts in self.entries.items() if test_id in ts}

    def pairs(self) -> set[tuple[str, str]]:
        return {(p, t) for p, ts in self.entries.items() for t in ts}

    def merge(self, other: "CoverageMap") -> "CoverageMap":
        entries = {p: set(ts) for p, ts in self.entries.items()}
        for p, ts in other.entries.items():
            entries.setdefault(p, set()).update(ts)
        tests = list(self.tests) + [t for t in other.tests if t not in self.tests]
        return CoverageMap(entries, tests)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "tests": list(self.tests),
            "coverage": {p: sorted(ts) for p, ts in sorted(self.entries.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "CoverageMap":
        if "coverage" in data:
            raw, tests = data["coverage"], list(data.get("tests", []))
        else:
            # bare {"param": [test ids]} form
            raw, tests = data, []
        entries = {p: set(ts) for p, ts in raw.items()}
        if not tests:
            tests = sorted({t for ts in entries.values() for t in ts})
        return cls(entries, tests)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def build_coverage_map(
    traces: Iterable[AccessTrace],
    pins: Mapping[str, Iterable[str]] | None = None,
    params: Iterable[str] = (),
) -> CoverageMap:
    """Map each parameter to the tests that read it while unpinned.

    ``params`` lists parameters to include even when no test reads them.
    """
    pins = pins or {}
    entries: dict[str, set[str]] = {p: set() for p in params}
    tests: list[str] = []
    for trace in traces:
        if trace.test_id not in tests:
            tests.append(trace.test_id)
        pinned = set(pins.get(trace.test_id, ()))
        for access in trace.reads:
            if access.param not in pinned:
                entries.setdefault(access.param, set()).add(trace.test_id)
    return CoverageMap(entries, tests)


def percent(part: int, whole: int) -> float:
    """``part/whole`` as a percentage rounded half-up to one decimal."""
    if whole == 0:
        return 0.0
    value = (Decimal(part) * 100 / Decimal(whole)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return float(value)


@dataclass(frozen=True)
class CoverageStats:
    total_params: int
    exercised_params: int
    percentage: float
    uncovered: frozenset[str]

    def cell(self) -> str:
        """Table-style ``exercised (pct%)`` cell, e.g. ``373 (96.4%)``."""
        return f"{self.exercised_params} ({self.percentage:.1f}%)"

    def __str__(self) -> str:
        return f"{self.total_params} & {self.cell()}"

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "total": self.total_params,
            "exercised": self.exercised_params,
            "percentage": self.percentage,
            "uncovered": sorted(self.uncovered),
        }


def stats_from_counts(total: int, exercised: int, uncovered: Iterable[str] = ()) -> CoverageStats:
    if not 0 <= exercised <= total:
        raise ValueError(f"exercised ({exercised}) must be within [0, total={total}]")
    return CoverageStats(total, exercised, percent(exercised, total), frozenset(uncovered))


def coverage_stats(covmap: CoverageMap, registry: ParamRegistry) -> CoverageStats:
    exercised = {p for p in registry if covmap.tests_for(p)}
    uncovered = set(registry) - exercised
    return stats_from_counts(len(registry), len(exercised), uncovered)


def dependents_closure(changed: Iterable[str], registry: ParamRegistry) -> set[str]:
    """``changed`` plus every parameter that transitively depends on one of them."""
    seen: set[str] = set()
    queue = deque()
    for pid in changed:
        registry[pid]  # raises UnknownParam
        if pid not in seen:
            seen.add(pid)
            queue.append(pid)
    while queue:
        for dependent in registry.dependents_of(queue.popleft()):
            if dependent not in seen:
                seen.add(dependent)
                queue.append(dependent)
    return seen
