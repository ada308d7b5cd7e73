"""Typed configuration model: parameter schemas, raw-string stores and diffs.

Stores hold raw strings only. Values are typed when read, so an ill-typed
value can sit in a store until some code path actually reads it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from types import MappingProxyType
from typing import Any, Iterable, Iterator, Literal, Mapping

from .errors import (
    BadDefault,
    CyclicDependency,
    DanglingDependency,
    DuplicateParam,
    InvalidParamId,
    MissingValue,
    TypeMismatch,
    UnknownParam,
)

PARAM_ID_RE = re.compile(r"[a-z0-9_-]+(?:\.[a-z0-9_-]+)*")

KINDS = ("string", "int", "float", "bool", "path", "duration-ms", "enum", "port")
NUMERIC_KINDS = frozenset({"int", "float", "duration-ms", "port"})

# Java-style 32-bit int, as in the configuration APIs this models.
INT_MIN, INT_MAX = -(2**31), 2**31 - 1
PORT_MIN, PORT_MAX = 1, 65535
DURATION_MAX = 2**63 - 1

_INT_RE = re.compile(r"-?[0-9]+")
_UINT_RE = re.compile(r"[0-9]+")
_FLOAT_RE = re.compile(r"-?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][-+]?[0-9]+)?")

Provenance = Literal["test-default", "deployed", "mutated"]
DependencyKind = Literal["enables", "derives"]


def is_param_id(name: object) -> bool:
    return isinstance(name, str) and PARAM_ID_RE.fullmatch(name) is not None


def check_param_id(name: object) -> str:
    if not is_param_id(name):
        raise InvalidParamId(name)
    return name  # type: ignore[return-value]


class RejectedValue(ValueError):
    """Raised by ``ParamType.parse``; ``rule`` names the violated constraint."""

    def __init__(self, rule: str, reason: str):
        super().__init__(reason)
        self.rule = rule
        self.reason = reason


@dataclass(frozen=True)
class ParamType:
    kind: str
    variants: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown parameter type {self.kind!r}")
        if self.kind == "enum":
            if not self.variants or len(set(self.variants)) != len(self.variants):
                raise ValueError("enum needs at least one variant, all distinct")
        elif self.variants:
            raise ValueError(f"{self.kind} takes no variants")

    @classmethod
    def enum(cls, *variants: str) -> "ParamType":
        return cls("enum", tuple(variants))

    @classmethod
    def from_token(cls, token: str) -> "ParamType":
        """Parse ``int``, ``duration-ms``, ``enum(a,b,c)`` and friends."""
        if token.startswith("enum(") and token.endswith(")"):
            return cls.enum(*[v for v in token[5:-1].split(",")])
        return cls(token)

    def __str__(self) -> str:
        if self.kind == "enum":
            return f"enum({','.join(self.variants)})"
        return self.kind

    def parse(self, raw: str) -> Any:
        """Total, deterministic parse of ``raw``; raises RejectedValue."""
        kind = self.kind
        if kind == "string":
            return raw
        if raw == "":
            raise RejectedValue("non-empty", "empty value")
        if kind == "path":
            if "\x00" in raw:
                raise RejectedValue("type", "NUL byte in path")
            return raw
        if kind == "bool":
            if raw == "true":
                return True
            if raw == "false":
                return False
            raise RejectedValue("type", "expected 'true' or 'false'")
        if kind == "enum":
            if raw not in self.variants:
                raise RejectedValue("enum", f"expected one of {', '.join(self.variants)}")
            return raw
        if kind == "float":
            if not _FLOAT_RE.fullmatch(raw):
                raise RejectedValue("type", "not a decimal number")
            value = float(raw)
            if not math.isfinite(value):
                raise RejectedValue("range", "not finite")
            return value
        if kind == "duration-ms":
            if not _INT_RE.fullmatch(raw):
                raise RejectedValue("type", "expected whole milliseconds")
            value = int(raw)
            if not 0 <= value <= DURATION_MAX:
                raise RejectedValue("range", "duration must be non-negative")
            return value
        # int and port
        if not _INT_RE.fullmatch(raw):
            raise RejectedValue("type", "not an integer")
        value = int(raw)
        lo, hi = (PORT_MIN, PORT_MAX) if kind == "port" else (INT_MIN, INT_MAX)
        if not lo <= value <= hi:
            raise RejectedValue("range", f"outside [{lo}, {hi}]")
        return value

    def accepts(self, raw: str) -> bool:
        try:
            self.parse(raw)
        except RejectedValue:
            return False
        return True


@dataclass(frozen=True)
class DependencyEdge:
    """``dependent`` depends on ``dependee``: a change to the dependee must
    also re-test the dependent."""

    dependent: str
    dependee: str
    kind: DependencyKind = "enables"

    def __post_init__(self):
        if self.kind not in ("enables", "derives"):
            raise ValueError(f"unknown dependency kind {self.kind!r}")


@dataclass(frozen=True)
class ParamSpec:
    id: str
    type: ParamType
    default: str | None = None
    description: str = ""
    dependencies: tuple[DependencyEdge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "dependencies", tuple(self.dependencies))
        for edge in self.dependencies:
            if edge.dependent != self.id:
                raise ValueError(
                    f"edge {edge.dependent}->{edge.dependee} does not originate at {self.id}"
                )


class ParamRegistry:
    """Immutable, validated collection of ParamSpecs.

    Build through ``register_params``; the constructor does not validate.
    """

    def __init__(self, specs: Mapping[str, ParamSpec]):
        self._specs = dict(specs)
        self._dependents: dict[str, list[str]] = {p: [] for p in self._specs}
        for spec in self._specs.values():
            for edge in spec.dependencies:
                self._dependents[edge.dependee].append(edge.dependent)

    def __contains__(self, pid: object) -> bool:
        return pid in self._specs

    def __getitem__(self, pid: str) -> ParamSpec:
        try:
            return self._specs[pid]
        except KeyError:
            raise UnknownParam(pid) from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._specs)

    def __len__(self) -> int:
        return len(self._specs)

    def __repr__(self) -> str:
        return f"ParamRegistry({len(self)} params, {len(self.edges)} edges)"

    @property
    def specs(self) -> Mapping[str, ParamSpec]:
        return MappingProxyType(self._specs)

    @property
    def edges(self) -> tuple[DependencyEdge, ...]:
        return tuple(e for s in self._specs.values() for e in s.dependencies)

    def dependents_of(self, pid: str) -> tuple[str, ...]:
        """Direct dependents: params whose edges point at ``pid``."""
        return tuple(self._dependents[pid])

    def defaults(self) -> dict[str, str]:
        return {p: s.default for p, s in self._specs.items() if s.default is not None}


def register_params(specs: Iterable[ParamSpec]) -> ParamRegistry:
    table: dict[str, ParamSpec] = {}
    for spec in specs:
        check_param_id(spec.id)
        if spec.id in table:
            raise DuplicateParam(spec.id)
        if spec.default is not None:
            try:
                spec.type.parse(spec.default)
            except RejectedValue as exc:
                raise BadDefault(f"{spec.id}: default {spec.default!r}: {exc.reason}") from None
        table[spec.id] = spec

    graph: dict[str, set[str]] = {p: set() for p in table}
    for spec in table.values():
        for edge in spec.dependencies:
            if edge.dependee == edge.dependent:
                raise CyclicDependency(f"{edge.dependent} depends on itself")
            if edge.dependee not in table:
                raise DanglingDependency(f"{edge.dependent} depends on unregistered {edge.dependee}")
            graph[spec.id].add(edge.dependee)
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        cycle = " -> ".join(exc.args[1])
        raise CyclicDependency(f"dependency cycle: {cycle}") from None
    return ParamRegistry(table)


@dataclass(frozen=True, eq=False)
class ConfigStore:
    """Key -> raw string map. A value: every update returns a new store.

    Equality compares entries only; ``provenance`` is a label.
    """

    entries: Mapping[str, str] = field(default_factory=dict)
    provenance: Provenance = "test-default"

    def __post_init__(self):
        entries = dict(self.entries)
        for key, value in entries.items():
            check_param_id(key)
            if not isinstance(value, str):
                raise TypeError(f"value for {key!r} must be str, got {type(value).__name__}")
        object.__setattr__(self, "entries", MappingProxyType(entries))

    @classmethod
    def _trusted(cls, entries: Mapping[str, str], provenance: Provenance) -> "ConfigStore":
        # Skips copying and validation; used to wrap recording mappings.
        store = object.__new__(cls)
        object.__setattr__(store, "entries", entries)
        object.__setattr__(store, "provenance", provenance)
        return store

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConfigStore):
            return NotImplemented
        return dict(self.entries) == dict(other.entries)

    def __hash__(self) -> int:
        return hash(frozenset(self.entries.items()))

    def __contains__(self, pid: object) -> bool:
        return pid in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def get(self, pid: str, default: str | None = None) -> str | None:
        return self.entries.get(pid, default)

    def with_provenance(self, provenance: Provenance) -> "ConfigStore":
        return ConfigStore(self.entries, provenance)

    def without(self, pid: str) -> "ConfigStore":
        entries = dict(self.entries)
        entries.pop(pid, None)
        return ConfigStore(entries, self.provenance)

    def to_dict(self) -> dict[str, str]:
        return dict(sorted(self.entries.items()))


def lookup_raw(store: ConfigStore, registry: ParamRegistry, pid: str) -> tuple[str | None, str]:
    """Effective raw value of ``pid`` and where it came from (store/default/missing)."""
    spec = registry[pid]
    raw = store.entries.get(pid)
    if raw is not None:
        return raw, "store"
    if spec.default is not None:
        return spec.default, "default"
    return None, "missing"


def typed_get(store: ConfigStore, registry: ParamRegistry, pid: str) -> Any:
    spec = registry[pid]
    raw, _ = lookup_raw(store, registry, pid)
    if raw is None:
        raise MissingValue(pid)
    try:
        return spec.type.parse(raw)
    except RejectedValue as exc:
        raise TypeMismatch(pid, raw, str(spec.type), exc.reason) from None


def set_value(store: ConfigStore, pid: str, raw: str) -> ConfigStore:
    check_param_id(pid)
    entries = dict(store.entries)
    entries[pid] = raw
    return ConfigStore(entries, store.provenance)


@dataclass(frozen=True)
class ConfigDiff:
    changed: Mapping[str, tuple[str, str]] = field(default_factory=dict)
    added: Mapping[str, str] = field(default_factory=dict)
    removed: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("changed", "added", "removed"):
            object.__setattr__(self, name, MappingProxyType(dict(getattr(self, name))))
        keys = [set(self.changed), set(self.added), set(self.removed)]
        if keys[0] & keys[1] or keys[0] & keys[2] or keys[1] & keys[2]:
            raise ValueError("changed/added/removed key sets must be disjoint")
        for pid, (old, new) in self.changed.items():
            if old == new:
                raise ValueError(f"{pid}: changed entry with identical values")

    def __bool__(self) -> bool:
        return bool(self.changed or self.added or self.removed)

    def keys(self) -> set[str]:
        return set(self.changed) | set(self.added) | set(self.removed)

    def apply(self, store: ConfigStore) -> ConfigStore:
        entries = dict(store.entries)
        for pid, (_, new) in self.changed.items():
            entries[pid] = new
        entries.update(self.added)
        for pid in self.removed:
            entries.pop(pid, None)
        return ConfigStore(entries, store.provenance)

    def to_dict(self) -> dict:
        return {
            "changed": {k: {"old": o, "new": n} for k, (o, n) in sorted(self.changed.items())},
            "added": dict(sorted(self.added.items())),
            "removed": dict(sorted(self.removed.items())),
        }


def compute_diff(old: ConfigStore, new: ConfigStore) -> ConfigDiff:
    a, b = old.entries, new.entries
    return ConfigDiff(
        changed={k: (a[k], b[k]) for k in a if k in b and a[k] != b[k]},
        added={k: b[k] for k in b if k not in a},
        removed={k: a[k] for k in a if k not in b},
    )
