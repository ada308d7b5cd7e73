"""Suite quality against labeled configs, and the rule-based validator baseline."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .coverage import CoverageMap
from .harness import ConcretizationPolicy, TestCase, run_suite
from .model import ConfigStore, ParamRegistry, RejectedValue, compute_diff
from .mutation import LabeledConfig
from .sandbox import SandboxSpec
from .selection import select_tests


@dataclass(frozen=True)
class Violation:
    param: str
    rule: str  # type | range | enum | non-empty | missing | unknown
    message: str = ""


def baseline_validate(store: ConfigStore, registry: ParamRegistry) -> list[Violation]:
    """Check type, range and format rules derivable from the schema alone.

    Never opens files or runs code, so values that are well-formed but
    unusable (a corrupt key file, a dangling path) pass.
    """
    violations = []
    for pid in sorted(set(store.entries) | set(registry)):
        if pid not in registry:
            violations.append(Violation(pid, "unknown", "not a registered parameter"))
            continue
        spec = registry[pid]
        raw = store.entries.get(pid)
        if raw is None:
            if spec.default is None:
                violations.append(Violation(pid, "missing", "no value and no default"))
            continue
        try:
            spec.type.parse(raw)
        except RejectedValue as exc:
            violations.append(Violation(pid, exc.rule, exc.reason))
    return violations


@dataclass(frozen=True)
class ConfigOutcome:
    index: int
    label: str
    mutated_param: str | None
    operator: str | None
    selected: int
    failed: tuple[str, ...] = ()
    errored: tuple[str, ...] = ()
    validator_rules: tuple[str, ...] = ()

    @property
    def detected(self) -> bool:
        return bool(self.failed or self.errored)

    @property
    def validator_flagged(self) -> bool:
        return bool(self.validator_rules)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "label": self.label,
            "mutated_param": self.mutated_param,
            "operator": self.operator,
            "selected": self.selected,
            "failed": list(self.failed),
            "errored": list(self.errored),
            "ctest_detected": self.detected,
            "validator_flagged": self.validator_flagged,
            "validator_rules": list(self.validator_rules),
        }


@dataclass
class QualityReport:
    outcomes: list[ConfigOutcome] = field(default_factory=list)

    @property
    def bad_total(self) -> int:
        return sum(o.label == "bad" for o in self.outcomes)

    @property
    def good_total(self) -> int:
        return sum(o.label == "good" for o in self.outcomes)

    @property
    def false_negatives(self) -> int:
        return sum(o.label == "bad" and not o.detected for o in self.outcomes)

    @property
    def false_positives(self) -> int:
        return sum(o.label == "good" and o.detected for o in self.outcomes)

    @property
    def fn_rate(self) -> float:
        return self.false_negatives / self.bad_total if self.bad_total else 0.0

    @property
    def fp_rate(self) -> float:
        return self.false_positives / self.good_total if self.good_total else 0.0

    def per_param(self) -> dict[str, dict]:
        table: dict[str, dict] = {}
        for o in self.outcomes:
            if o.label != "bad":
                continue
            row = table.setdefault(o.mutated_param, {"mutants": 0, "detected": 0, "missed": []})
            row["mutants"] += 1
            if o.detected:
                row["detected"] += 1
            else:
                row["missed"].append(o.operator)
        for row in table.values():
            row["all_detected"] = row["detected"] == row["mutants"]
        return dict(sorted(table.items()))

    def legal_misconfigurations(self) -> list[ConfigOutcome]:
        """Bad configs the validator accepts but the tests catch."""
        return [o for o in self.outcomes if o.label == "bad" and o.detected and not o.validator_flagged]

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "false_negatives": {"count": self.false_negatives, "rate": self.fn_rate, "of": self.bad_total},
            "false_positives": {"count": self.false_positives, "rate": self.fp_rate, "of": self.good_total},
            "per_param": self.per_param(),
            "validator_comparison": [o.to_dict() for o in self.outcomes],
            "legal_misconfigurations": [o.index for o in self.legal_misconfigurations()],
            "metadata": {"generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary(self) -> str:
        return (
            f"FN {self.false_negatives}/{self.bad_total} ({self.fn_rate:.1%}), "
            f"FP {self.false_positives}/{self.good_total} ({self.fp_rate:.1%}), "
            f"{len(self.legal_misconfigurations())} legal misconfiguration(s) caught"
        )


def evaluate_quality(
    tests: Sequence[TestCase],
    corpus: Sequence[LabeledConfig],
    covmap: CoverageMap,
    registry: ParamRegistry,
    policy: ConcretizationPolicy | None = None,
    sandbox: SandboxSpec | None = None,
    *,
    pins: Mapping[str, frozenset[str]] | None = None,
    timeout_s: float = 30.0,
    parallel: int = 1,
) -> QualityReport:
    """Run each labeled config and score false negatives and false positives.

    Good configs run the full suite. Bad configs run only the tests selected
    by their diff against the first good config in the corpus.
    """
    policy = policy or ConcretizationPolicy()
    goods = [c for c in corpus if c.label == "good"]
    if not goods:
        raise ValueError("corpus needs a good configuration to diff against")
    base = goods[0].store
    order = [t.id for t in tests]
    if pins is None:
        pins = run_suite(tests, base, policy, registry, sandbox, timeout_s=timeout_s).pins()

    report = QualityReport()
    for index, item in enumerate(corpus):
        if item.label == "good":
            chosen = list(tests)
        else:
            wanted = set(select_tests(compute_diff(base, item.store), covmap, registry, order).selected)
            chosen = [t for t in tests if t.id in wanted]
        run = run_suite(chosen, item.store, policy, registry, sandbox,
                        pins=pins, timeout_s=timeout_s, parallel=parallel)
        report.outcomes.append(ConfigOutcome(
            index=index,
            label=item.label,
            mutated_param=item.mutated_param,
            operator=item.operator.value if item.operator else None,
            selected=len(chosen),
            failed=tuple(r.test_id for r in run if r.verdict.status == "fail"),
            errored=tuple(r.test_id for r in run if r.verdict.status == "error"),
            validator_rules=tuple(v.rule for v in baseline_validate(item.store, registry)),
        ))
    return report
