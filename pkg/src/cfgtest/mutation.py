"""Constraint-aware mutation operators and misconfiguration corpus generation."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum
from pathlib import Path
from typing import Sequence

from .configio import parse_properties, serialize_properties
from .errors import InapplicableOperator, SeedConfigFails
from .harness import ConcretizationPolicy, TestCase, run_suite
from .model import (
    DURATION_MAX,
    INT_MAX,
    INT_MIN,
    PORT_MAX,
    PORT_MIN,
    ConfigStore,
    ParamRegistry,
    ParamSpec,
    set_value,
)
from .sandbox import CORRUPT_PREFIX, DENY_PREFIX, SANDBOX_PREFIX, SandboxSpec

_ALL = frozenset({"string", "int", "float", "bool", "path", "duration-ms", "enum", "port"})
_NUMERIC = frozenset({"int", "float", "duration-ms", "port"})


class MutationOperator(str, Enum):
    TYPE_BREAK = "type-break"
    RANGE_BREAK = "range-break"
    NONEXISTENT_PATH = "nonexistent-path"
    PERMISSION_DENY = "permission-deny"
    WRONG_CONTENT_FILE = "wrong-content-file"
    ENUM_INVALID = "enum-invalid"
    UNIT_SCALE = "unit-scale"
    EMPTY_VALUE = "empty-value"
    WHITESPACE_PAD = "whitespace-pad"

    @property
    def kinds(self) -> frozenset[str]:
        return _APPLIES_TO[self]

    def applies_to(self, spec: ParamSpec) -> bool:
        return spec.type.kind in self.kinds

    def __str__(self) -> str:
        return self.value


_APPLIES_TO = {
    MutationOperator.TYPE_BREAK: _NUMERIC | {"bool"},
    MutationOperator.RANGE_BREAK: frozenset({"int", "duration-ms", "port"}),
    MutationOperator.NONEXISTENT_PATH: frozenset({"path"}),
    MutationOperator.PERMISSION_DENY: frozenset({"path"}),
    MutationOperator.WRONG_CONTENT_FILE: frozenset({"path"}),
    MutationOperator.ENUM_INVALID: frozenset({"enum"}),
    MutationOperator.UNIT_SCALE: frozenset({"int", "float", "duration-ms"}),
    MutationOperator.EMPTY_VALUE: _ALL,
    MutationOperator.WHITESPACE_PAD: _ALL,
}

_RANGES = {
    "port": (PORT_MIN, PORT_MAX),
    "int": (INT_MIN, INT_MAX),
    "duration-ms": (0, DURATION_MAX),
}


def _sandbox_rel(base: str) -> str | None:
    if base.startswith(SANDBOX_PREFIX + "/"):
        return base[len(SANDBOX_PREFIX) + 1:]
    return None


def mutate(spec: ParamSpec, base: str, op: MutationOperator | str, seed: int) -> str:
    """Deterministic single-value mutation; the result always differs from ``base``.

    For range-break, even seeds exceed the upper bound by one and odd seeds
    go one below the lower bound. Other value choices are drawn from a
    generator keyed on (seed, param, operator).
    """
    op = MutationOperator(op)
    kind = spec.type.kind
    if not op.applies_to(spec):
        raise InapplicableOperator(f"{op} does not apply to {kind} parameter {spec.id}")
    rng = random.Random(f"{seed}:{spec.id}:{op.value}")

    if op is MutationOperator.TYPE_BREAK:
        if kind == "bool":
            candidates = ["yes", "True", "1", "on"]
        elif kind == "float":
            candidates = ["one", "1,5", "1.5.0", f"{base}f"]
        else:
            candidates = ["twelve", "1.5", "0x1F", f"{base}x"]
        out = rng.choice([c for c in candidates if c != base and not spec.type.accepts(c)])
    elif op is MutationOperator.RANGE_BREAK:
        lo, hi = _RANGES[kind]
        out = str(hi + 1) if seed % 2 == 0 else str(lo - 1)
    elif op is MutationOperator.NONEXISTENT_PATH:
        name = base.rstrip("/").rsplit("/", 1)[-1] or "missing"
        if name.startswith("<sandbox"):
            name = "missing"
        out = f"{SANDBOX_PREFIX}/absent-{rng.getrandbits(32):08x}/{name}"
    elif op in (MutationOperator.PERMISSION_DENY, MutationOperator.WRONG_CONTENT_FILE):
        rel = _sandbox_rel(base)
        if not rel:
            raise InapplicableOperator(f"{op} needs a sandbox fixture path, got {base!r}")
        prefix = DENY_PREFIX if op is MutationOperator.PERMISSION_DENY else CORRUPT_PREFIX
        out = f"{prefix}/{rel}"
    elif op is MutationOperator.ENUM_INVALID:
        candidates = [base.upper(), f"{base}-x", "bogus", spec.type.variants[0] + " "]
        out = rng.choice([c for c in candidates if c not in spec.type.variants])
    elif op is MutationOperator.UNIT_SCALE:
        try:
            value = Decimal(base)
        except InvalidOperation:
            raise InapplicableOperator(f"unit-scale needs a numeric base, got {base!r}") from None
        if not value.is_finite():
            raise InapplicableOperator(f"unit-scale needs a finite base, got {base!r}")
        scaled = value * 1000
        out = str(int(scaled)) if kind != "float" else str(scaled)
    elif op is MutationOperator.EMPTY_VALUE:
        out = ""
    else:
        pad = rng.choice([" ", "\t"])
        out = rng.choice([pad + base, base + pad, pad + base + pad])

    if out == base:
        raise InapplicableOperator(f"{op} cannot change {base!r} for {spec.id}")
    return out


@dataclass(frozen=True)
class LabeledConfig:
    store: ConfigStore
    label: str  # good | bad
    mutated_param: str | None = None
    operator: MutationOperator | None = None

    def __post_init__(self):
        if self.label not in ("good", "bad"):
            raise ValueError(f"label must be good or bad, not {self.label!r}")
        if self.label == "bad" and (self.mutated_param is None or self.operator is None):
            raise ValueError("bad configs must name the mutated parameter and operator")


def generate_corpus(
    registry: ParamRegistry,
    good_conf: ConfigStore,
    budget: int,
    seed: int = 0,
    *,
    tests: Sequence[TestCase] | None = None,
    sandbox: SandboxSpec | None = None,
    policy: ConcretizationPolicy | None = None,
) -> list[LabeledConfig]:
    """``good_conf`` (labelled good) followed by up to ``budget`` single-param mutants.

    Parameters are visited round-robin so early mutants spread over many
    parameters; the seed fixes parameter order, per-parameter operator order
    and value choices. When ``tests`` is given, ``good_conf`` must pass them.
    """
    if tests is not None:
        report = run_suite(tests, good_conf, policy or ConcretizationPolicy(), registry, sandbox)
        failing = [r.test_id for r in report if r.verdict.status != "pass"]
        if failing:
            raise SeedConfigFails(failing)

    good = good_conf.with_provenance("deployed")
    corpus = [LabeledConfig(good, "good")]
    rng = random.Random(seed)
    params = sorted(registry)
    rng.shuffle(params)
    queues: dict[str, list[MutationOperator]] = {}
    for pid in params:
        ops = [op for op in MutationOperator if op.applies_to(registry[pid])]
        rng.shuffle(ops)
        queues[pid] = ops

    seen = {good}
    produced = 0
    while produced < budget and any(queues.values()):
        for pid in params:
            if produced >= budget:
                break
            if not queues[pid]:
                continue
            op = queues[pid].pop(0)
            base = good.get(pid, registry[pid].default)
            if base is None:
                continue
            try:
                value = mutate(registry[pid], base, op, seed)
            except InapplicableOperator:
                continue
            store = set_value(good, pid, value).with_provenance("mutated")
            if store in seen:
                continue
            seen.add(store)
            corpus.append(LabeledConfig(store, "bad", pid, op))
            produced += 1
    return corpus


def save_corpus(corpus: Sequence[LabeledConfig], directory: str | Path) -> Path:
    """One properties file per config plus ``index.json``.

    The index keeps the exact mutated value, since padded values do not
    survive the properties format's whitespace trimming.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = []
    for i, item in enumerate(corpus):
        name = f"{i:04d}-{item.label}.properties"
        (directory / name).write_text(serialize_properties(item.store), encoding="utf-8")
        entry = {"file": name, "label": item.label, "mutated_param": item.mutated_param,
                 "operator": item.operator.value if item.operator else None}
        if item.mutated_param is not None:
            entry["value"] = item.store.get(item.mutated_param)
        index.append(entry)
    (directory / "index.json").write_text(
        json.dumps({"schema_version": 1, "configs": index}, indent=2) + "\n", encoding="utf-8"
    )
    return directory


def load_corpus(directory: str | Path) -> list[LabeledConfig]:
    directory = Path(directory)
    index = json.loads((directory / "index.json").read_text(encoding="utf-8"))
    corpus = []
    for entry in index["configs"]:
        store = parse_properties((directory / entry["file"]).read_text(encoding="utf-8"))
        pid = entry.get("mutated_param")
        if pid is not None and "value" in entry:
            store = set_value(store, pid, entry["value"])
        op = MutationOperator(entry["operator"]) if entry.get("operator") else None
        provenance = "mutated" if entry["label"] == "bad" else "deployed"
        corpus.append(LabeledConfig(store.with_provenance(provenance), entry["label"], pid, op))
    return corpus
