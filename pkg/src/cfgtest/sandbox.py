"""Per-test temporary directories with materialized fixture files.

Path-typed values refer into the sandbox through tokens that are resolved at
read time, so recorded traces never contain temp-directory names:

``<sandbox>/rel``          the fixture (or free path) ``rel`` under the root
``<sandbox:deny>/rel``     a copy of ``rel`` with no owner access bits
                           (a mode-0o555 directory when ``rel`` is not a file fixture)
``<sandbox:corrupt>/rel``  a copy of file fixture ``rel`` truncated to half its
                           size (a garbage file when ``rel`` is not a fixture)

Anything else is returned unchanged.
"""

from __future__ import annotations

import os
import re
import shutil
import stat
import tempfile
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Mapping

from .errors import HarnessError

TOKEN_RE = re.compile(r"<sandbox(?::(deny|corrupt))?>(?:/(.*))?", re.DOTALL)
SANDBOX_PREFIX = "<sandbox>"
DENY_PREFIX = "<sandbox:deny>"
CORRUPT_PREFIX = "<sandbox:corrupt>"


@dataclass(frozen=True)
class FixtureFile:
    content: bytes
    mode: int = 0o644


@dataclass(frozen=True)
class SandboxSpec:
    files: Mapping[str, FixtureFile] = field(default_factory=dict)
    dirs: tuple[str, ...] = ()

    def materialize(self) -> "Sandbox":
        return Sandbox(self)


def _safe_rel(rel: str) -> PurePosixPath:
    path = PurePosixPath(rel)
    if path.is_absolute() or ".." in path.parts:
        raise ValueError(f"fixture path {rel!r} escapes the sandbox")
    return path


class Sandbox:
    """A materialized sandbox. Use as a context manager; teardown removes it."""

    def __init__(self, spec: SandboxSpec):
        self.spec = spec
        self._tmp = tempfile.mkdtemp(prefix="cfgtest-")
        self.root = Path(self._tmp)
        try:
            for rel in spec.dirs:
                (self.root / _safe_rel(rel)).mkdir(parents=True, exist_ok=True)
            for rel, fixture in spec.files.items():
                target = self.root / _safe_rel(rel)
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_bytes(fixture.content)
                target.chmod(fixture.mode)
        except Exception as exc:
            self.close()
            raise HarnessError(f"sandbox setup failed: {exc}") from exc

    def __enter__(self) -> "Sandbox":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def close(self) -> None:
        if not os.path.isdir(self._tmp):
            return
        # Restore access bits first so non-root users can delete denied entries.
        for dirpath, dirnames, filenames in os.walk(self._tmp):
            for name in dirnames + filenames:
                try:
                    os.chmod(os.path.join(dirpath, name), stat.S_IRWXU)
                except OSError:
                    pass
        shutil.rmtree(self._tmp, ignore_errors=True)

    def path(self, rel: str = "") -> Path:
        return self.root / _safe_rel(rel) if rel else self.root

    def resolve(self, raw: str) -> str:
        m = TOKEN_RE.fullmatch(raw)
        if m is None:
            return raw
        variant, rel = m.group(1), m.group(2) or ""
        try:
            relpath = _safe_rel(rel)
        except ValueError:
            return raw
        if variant is None:
            return str(self.root / relpath) if rel else str(self.root)
        target = self.root / f".{variant}" / relpath
        if not os.path.lexists(target):
            self._materialize_variant(variant, rel, target)
        return str(target)

    def _materialize_variant(self, variant: str, rel: str, target: Path) -> None:
        fixture = self.spec.files.get(rel)
        target.parent.mkdir(parents=True, exist_ok=True)
        if variant == "deny":
            if fixture is not None:
                target.write_bytes(fixture.content)
                target.chmod(0)
            else:
                target.mkdir()
                target.chmod(0o555)
        else:
            if fixture is not None:
                target.write_bytes(fixture.content[: len(fixture.content) // 2])
                target.chmod(fixture.mode)
            else:
                target.write_bytes(b"\x00corrupt\n")

    def scrub(self, text: str) -> str:
        """Replace the concrete root path so messages are run-independent."""
        return text.replace(str(self.root), SANDBOX_PREFIX)
