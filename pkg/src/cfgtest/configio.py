"""Flat ``key=value`` configuration files and the registry manifest format.

Manifest lines::

    # comment
    param <id> <type> [default=<raw>]
    dep <dependentId> <enables|derives> <dependeeId>

Types are ``string int float bool path duration-ms port`` or ``enum(a,b,...)``.
Everything after ``default=`` is taken verbatim (trimmed), so defaults may
contain spaces.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal

from .errors import DanglingDependency, InvalidParamId, MalformedLine, ManifestError
from .model import (
    ConfigStore,
    DependencyEdge,
    ParamRegistry,
    ParamSpec,
    ParamType,
    Provenance,
    is_param_id,
    register_params,
)


class DuplicateKeyWarning(UserWarning):
    pass


LineKind = Literal["entry", "comment", "blank"]


@dataclass
class PropertiesDocument:
    """Parsed file keeping every line with its classification."""

    lines: list[tuple[str, LineKind]] = field(default_factory=list)
    entries: dict[str, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str) -> "PropertiesDocument":
        doc = cls()
        for lineno, line in enumerate(_split_lines(text), start=1):
            stripped = line.strip()
            if not stripped:
                doc.lines.append((line, "blank"))
                continue
            if stripped.startswith("#"):
                doc.lines.append((line, "comment"))
                continue
            key, sep, value = stripped.partition("=")
            if not sep:
                raise MalformedLine(lineno, line)
            key = key.strip()
            if not is_param_id(key):
                raise InvalidParamId(key, line=lineno)
            if key in doc.entries:
                doc.warnings.append(f"line {lineno}: duplicate key {key!r}, last value wins")
            doc.entries[key] = value.strip()
            doc.lines.append((line, "entry"))
        return doc

    def to_store(self, provenance: Provenance = "deployed") -> ConfigStore:
        return ConfigStore(self.entries, provenance)

    def render(self) -> str:
        return "".join(line + "\n" for line, _ in self.lines)


def _split_lines(text: str) -> list[str]:
    # Only LF/CRLF terminate lines; other Unicode separators are value bytes.
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [ln[:-1] if ln.endswith("\r") else ln for ln in lines]


def parse_properties(text: str, provenance: Provenance = "deployed") -> ConfigStore:
    """Parse a properties file; duplicate keys emit ``DuplicateKeyWarning``."""
    doc = PropertiesDocument.parse(text)
    for message in doc.warnings:
        warnings.warn(message, DuplicateKeyWarning, stacklevel=2)
    return doc.to_store(provenance)


def serialize_properties(store: ConfigStore) -> str:
    # Values with line breaks or surrounding whitespace cannot round-trip;
    # they are written verbatim anyway (no escaping).
    return "".join(f"{k}={v}\n" for k, v in sorted(store.entries.items()))


def load_registry(text: str) -> ParamRegistry:
    params: set[str] = set()
    order: list[tuple[str, ParamType, str | None]] = []
    deps: list[tuple[int, DependencyEdge]] = []

    for lineno, line in enumerate(_split_lines(text), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split(None, 3)
        directive = parts[0]
        if directive == "param":
            if len(parts) < 3:
                raise ManifestError(lineno, "expected 'param <id> <type> [default=<raw>]'")
            pid, type_token = parts[1], parts[2]
            if not is_param_id(pid):
                raise InvalidParamId(pid, line=lineno)
            try:
                ptype = ParamType.from_token(type_token)
            except ValueError as exc:
                raise ManifestError(lineno, str(exc)) from None
            default = None
            if len(parts) == 4:
                if not parts[3].startswith("default="):
                    raise ManifestError(lineno, f"unexpected {parts[3]!r}")
                default = parts[3][len("default="):].strip()
            order.append((pid, ptype, default))
            params.add(pid)
        elif directive == "dep":
            if len(parts) != 4 or len(stripped.split()) != 4:
                raise ManifestError(lineno, "expected 'dep <dependent> <enables|derives> <dependee>'")
            _, dependent, kind, dependee = parts
            if kind not in ("enables", "derives"):
                raise ManifestError(lineno, f"unknown dependency kind {kind!r}")
            for pid in (dependent, dependee):
                if not is_param_id(pid):
                    raise InvalidParamId(pid, line=lineno)
            deps.append((lineno, DependencyEdge(dependent, dependee, kind)))
        else:
            raise ManifestError(lineno, f"unknown directive {directive!r}")

    edges: dict[str, list[DependencyEdge]] = {}
    for lineno, edge in deps:
        if edge.dependent not in params:
            raise DanglingDependency(f"line {lineno}: {edge.dependent} is not declared")
        edges.setdefault(edge.dependent, []).append(edge)

    specs = []
    seen: set[str] = set()
    for pid, ptype, default in order:
        # Duplicates are passed through so register_params reports them.
        specs.append(ParamSpec(pid, ptype, default, dependencies=() if pid in seen else tuple(edges.get(pid, ()))))
        seen.add(pid)
    return register_params(specs)


def dump_registry(registry: ParamRegistry) -> str:
    out = []
    for pid, spec in registry.specs.items():
        line = f"param {pid} {spec.type}"
        if spec.default is not None:
            line += f" default={spec.default}"
        out.append(line)
    for edge in registry.edges:
        out.append(f"dep {edge.dependent} {edge.kind} {edge.dependee}")
    return "\n".join(out) + "\n"
