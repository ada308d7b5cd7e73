"""Run tests against instrumented configuration handles and record accesses.

Every test body receives a ``Configuration`` handle. All reads and writes go
through it and are appended to the test's ``AccessTrace``. Suites are run in
two passes per test: a calibration run against the test's own configuration
discovers which parameters the test writes (its pins), then the concretized
run substitutes deployed values according to the ``ConcretizationPolicy``.
"""

from __future__ import annotations

import threading
import time
from collections.abc import Mapping as MappingABC
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Literal, Mapping, Sequence

from .errors import HarnessError
from .model import (
    ConfigStore,
    ParamRegistry,
    check_param_id,
    lookup_raw,
    set_value,
    typed_get,
)
from .sandbox import Sandbox, SandboxSpec

Status = Literal["pass", "fail", "error"]
Classification = Literal["set", "get-only"]
DEFAULT_TIMEOUT_S = 30.0


@dataclass(frozen=True)
class TestCase:
    """A test body plus the hardcoded configuration it ships with.

    ``body(conf)`` passes by returning None/True, fails by returning a message
    (or False) or raising AssertionError; any other exception is an error.
    """

    __test__ = False  # not a pytest class

    id: str
    body: Callable[["Configuration"], Any]
    tags: tuple[str, ...] = ()
    conf: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Access:
    param: str
    raw: str | None
    source: str = "store"  # store | default | missing | written | forced


@dataclass
class AccessTrace:
    test_id: str
    reads: list[Access] = field(default_factory=list)
    writes: list[Access] = field(default_factory=list)

    def read_params(self) -> set[str]:
        return {a.param for a in self.reads}

    def written_params(self) -> set[str]:
        return {a.param for a in self.writes}

    def snapshot(self) -> "AccessTrace":
        return AccessTrace(self.test_id, list(self.reads), list(self.writes))

    def to_dict(self) -> dict:
        return {
            "test_id": self.test_id,
            "reads": [[a.param, a.raw, a.source] for a in self.reads],
            "writes": [[a.param, a.raw, a.source] for a in self.writes],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AccessTrace":
        return cls(
            data["test_id"],
            [Access(*row) for row in data.get("reads", [])],
            [Access(*row) for row in data.get("writes", [])],
        )


@dataclass(frozen=True)
class Verdict:
    status: Status
    detail: str = ""
    duration_ms: float = 0.0


@dataclass(frozen=True)
class ConcretizationPolicy:
    mode: Literal["replace-all", "replace-get-only", "replace-listed"] = "replace-get-only"
    params: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "params", frozenset(self.params))
        if self.mode not in ("replace-all", "replace-get-only", "replace-listed"):
            raise ValueError(f"unknown policy {self.mode!r}")
        if self.mode == "replace-listed" and not self.params:
            raise ValueError("replace-listed needs at least one parameter")
        for pid in self.params:
            check_param_id(pid)

    @classmethod
    def replace_all(cls) -> "ConcretizationPolicy":
        return cls("replace-all")

    @classmethod
    def replace_get_only(cls) -> "ConcretizationPolicy":
        return cls("replace-get-only")

    @classmethod
    def replace_listed(cls, params: Iterable[str]) -> "ConcretizationPolicy":
        return cls("replace-listed", frozenset(params))

    @classmethod
    def parse(cls, flag: str) -> "ConcretizationPolicy":
        """CLI form: ``all``, ``get-only`` or ``listed=p1,p2``."""
        if flag == "all":
            return cls.replace_all()
        if flag == "get-only":
            return cls.replace_get_only()
        if flag.startswith("listed="):
            return cls.replace_listed(p for p in flag[7:].split(",") if p)
        raise ValueError(f"unknown policy {flag!r} (expected all, get-only or listed=<p1,p2>)")

    def __str__(self) -> str:
        if self.mode == "replace-listed":
            return "listed=" + ",".join(sorted(self.params))
        return "all" if self.mode == "replace-all" else "get-only"

    def forced(self, actual: ConfigStore) -> dict[str, str]:
        """Deployed values that also override the test's own writes."""
        if self.mode == "replace-all":
            return dict(actual.entries)
        if self.mode == "replace-listed":
            return {p: v for p, v in actual.entries.items() if p in self.params}
        return {}

    def effective_pins(self, pins: Iterable[str], reads: Iterable[str]) -> frozenset[str]:
        """Params whose reads observe test values rather than deployed ones."""
        if self.mode == "replace-all":
            return frozenset()
        if self.mode == "replace-listed":
            return frozenset((set(pins) | set(reads)) - self.params)
        return frozenset(pins)


class ShadowRecorder:
    """Naive second recorder: logs every key looked up in the store mapping.

    Independent of the handle's trace; used only to verify trace completeness.
    """

    def __init__(self):
        self.reads: set[str] = set()

    def wrap(self, store: ConfigStore) -> ConfigStore:
        return ConfigStore._trusted(_RecordingMapping(store.entries, self.reads), store.provenance)


class _RecordingMapping(MappingABC):
    def __init__(self, data: Mapping[str, str], sink: set[str]):
        self._data = data
        self._sink = sink

    def __getitem__(self, key):
        self._sink.add(key)
        return self._data[key]

    def get(self, key, default=None):
        self._sink.add(key)
        return self._data.get(key, default)

    def __contains__(self, key):
        self._sink.add(key)
        return key in self._data

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return len(self._data)


class Configuration:
    """Instrumented configuration handle given to test bodies."""

    def __init__(
        self,
        store: ConfigStore,
        registry: ParamRegistry,
        sandbox: Sandbox | None = None,
        trace: AccessTrace | None = None,
        forced: Mapping[str, str] | None = None,
        shadow: ShadowRecorder | None = None,
    ):
        self.registry = registry
        self.sandbox = sandbox
        self.trace = trace
        self._forced = dict(forced or {})
        self._shadow = shadow
        self._written: set[str] = set()
        self._lock = threading.Lock()
        self._set_store(store)

    def _set_store(self, store: ConfigStore) -> None:
        self._store = store
        self._view = self._shadow.wrap(store) if self._shadow else store

    @property
    def store(self) -> ConfigStore:
        return self._store

    def _record_read(self, pid: str) -> str | None:
        raw, source = lookup_raw(self._view, self.registry, pid)
        if source == "store" and pid in self._written:
            source = "forced" if pid in self._forced else "written"
        if self.trace is not None:
            with self._lock:
                self.trace.reads.append(Access(pid, raw, source))
        return raw

    def get_raw(self, pid: str) -> str | None:
        return self._record_read(pid)

    def get(self, pid: str) -> Any:
        self._record_read(pid)
        value = typed_get(self._view, self.registry, pid)
        if self.sandbox is not None and self.registry[pid].type.kind == "path":
            value = self.sandbox.resolve(value)
        return value

    def set(self, pid: str, raw: str) -> None:
        check_param_id(pid)
        value = self._forced.get(pid, raw)
        self._written.add(pid)
        if self.trace is not None:
            with self._lock:
                self.trace.writes.append(Access(pid, value, "forced" if pid in self._forced else "written"))
        self._set_store(set_value(self._store, pid, value))


def concretize(
    test_conf: ConfigStore,
    actual_conf: ConfigStore,
    policy: ConcretizationPolicy,
    pinned: Iterable[str] = (),
) -> ConfigStore:
    pinned = set(pinned)
    entries = dict(test_conf.entries)
    for pid, raw in actual_conf.entries.items():
        if policy.mode == "replace-all":
            entries[pid] = raw
        elif policy.mode == "replace-get-only":
            if pid not in pinned:
                entries[pid] = raw
        elif pid in policy.params:
            entries[pid] = raw
    return ConfigStore(entries, "deployed")


def classify_test(trace: AccessTrace) -> Classification:
    return "set" if trace.writes else "get-only"


def _outcome(result: Any, exc: BaseException | None) -> tuple[Status, str]:
    if exc is not None:
        if isinstance(exc, AssertionError):
            return "fail", str(exc) or "assertion failed"
        return "error", f"{type(exc).__name__}: {exc}"
    if result is None or result is True:
        return "pass", ""
    if result is False:
        return "fail", "test returned False"
    return "fail", str(result)


def run_test(
    test: TestCase,
    store: ConfigStore,
    registry: ParamRegistry,
    sandbox: SandboxSpec | None = None,
    *,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    forced: Mapping[str, str] | None = None,
    shadow: ShadowRecorder | None = None,
) -> tuple[Verdict, AccessTrace]:
    trace = AccessTrace(test.id)
    spec = sandbox if sandbox is not None else SandboxSpec()
    try:
        box = spec.materialize()
    except HarnessError:
        raise
    except Exception as exc:
        raise HarnessError(f"{test.id}: sandbox setup failed: {exc}") from exc

    with box:
        conf = Configuration(store, registry, box, trace, forced, shadow)
        holder: dict[str, Any] = {}

        def target():
            try:
                holder["result"] = test.body(conf)
            except BaseException as exc:  # noqa: BLE001 - any fault is a verdict
                holder["exc"] = exc

        start = time.perf_counter()
        worker = threading.Thread(target=target, name=f"cfgtest:{test.id}", daemon=True)
        worker.start()
        worker.join(timeout_s)
        elapsed = (time.perf_counter() - start) * 1000.0
        if worker.is_alive():
            return (
                Verdict("error", f"timed out after {timeout_s:g} s", elapsed),
                trace.snapshot(),
            )
        status, detail = _outcome(holder.get("result"), holder.get("exc"))
        return Verdict(status, box.scrub(detail), elapsed), trace


@dataclass
class TestResult:
    __test__ = False

    test_id: str
    verdict: Verdict
    trace: AccessTrace
    pins: frozenset[str]
    effective_pins: frozenset[str]
    classification: Classification
    shadow_reads: frozenset[str] | None = None

    def covered_params(self) -> set[str]:
        return self.trace.read_params() - self.effective_pins

    def to_dict(self) -> dict:
        out = {
            "test_id": self.test_id,
            "status": self.verdict.status,
            "detail": self.verdict.detail,
            "classification": self.classification,
            "pins": sorted(self.pins),
            "effective_pins": sorted(self.effective_pins),
            "trace": self.trace.to_dict(),
        }
        if self.shadow_reads is not None:
            out["shadow_reads"] = sorted(self.shadow_reads)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "TestResult":
        shadow = data.get("shadow_reads")
        return cls(
            data["test_id"],
            Verdict(data["status"], data.get("detail", "")),
            AccessTrace.from_dict(data["trace"]),
            frozenset(data.get("pins", ())),
            frozenset(data.get("effective_pins", data.get("pins", ()))),
            data.get("classification", "get-only"),
            frozenset(shadow) if shadow is not None else None,
        )


@dataclass
class SuiteReport:
    results: list[TestResult] = field(default_factory=list)
    policy: str = "get-only"
    complete: bool = True
    error: str = ""

    def __iter__(self) -> Iterator[TestResult]:
        return iter(self.results)

    def __len__(self) -> int:
        return len(self.results)

    def __getitem__(self, test_id: str) -> TestResult:
        for r in self.results:
            if r.test_id == test_id:
                return r
        raise KeyError(test_id)

    @property
    def counts(self) -> dict[str, int]:
        counts = {"pass": 0, "fail": 0, "error": 0}
        for r in self.results:
            counts[r.verdict.status] += 1
        return counts

    @property
    def ok(self) -> bool:
        return self.complete and all(r.verdict.status == "pass" for r in self.results)

    def statuses(self) -> dict[str, Status]:
        return {r.test_id: r.verdict.status for r in self.results}

    def traces(self) -> list[AccessTrace]:
        return [r.trace for r in self.results]

    def pins(self) -> dict[str, frozenset[str]]:
        return {r.test_id: r.pins for r in self.results}

    def effective_pins(self) -> dict[str, frozenset[str]]:
        return {r.test_id: r.effective_pins for r in self.results}

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "policy": self.policy,
            "complete": self.complete,
            "error": self.error,
            "summary": {"total": len(self.results), **self.counts},
            "results": [r.to_dict() for r in self.results],
            "metadata": {
                "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "durations_ms": {r.test_id: round(r.verdict.duration_ms, 3) for r in self.results},
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SuiteReport":
        return cls(
            [TestResult.from_dict(r) for r in data.get("results", [])],
            data.get("policy", "get-only"),
            data.get("complete", True),
            data.get("error", ""),
        )


def run_suite(
    tests: Sequence[TestCase],
    actual_conf: ConfigStore,
    policy: ConcretizationPolicy,
    registry: ParamRegistry,
    sandbox: SandboxSpec | None = None,
    *,
    pins: Mapping[str, Iterable[str]] | None = None,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    parallel: int = 1,
    shadow: bool = False,
) -> SuiteReport:
    """Concretize and run every test, in list order.

    Pins not supplied in ``pins`` are discovered by a calibration run of the
    test against its own configuration. A HarnessError aborts the suite; the
    exception carries the results gathered so far (``complete=False``).
    """
    ids = [t.id for t in tests]
    if len(set(ids)) != len(ids):
        raise ValueError("test ids must be unique")
    known = {k: frozenset(v) for k, v in (pins or {}).items()}
    forced = policy.forced(actual_conf)

    def one(test: TestCase) -> TestResult:
        test_conf = ConfigStore(test.conf, "test-default")
        classification = None
        test_pins = known.get(test.id)
        if test_pins is None:
            _, calib = run_test(test, test_conf, registry, sandbox, timeout_s=timeout_s)
            test_pins = frozenset(calib.written_params())
            classification = classify_test(calib)
        store = concretize(test_conf, actual_conf, policy, test_pins)
        recorder = ShadowRecorder() if shadow else None
        verdict, trace = run_test(
            test, store, registry, sandbox, timeout_s=timeout_s, forced=forced, shadow=recorder
        )
        return TestResult(
            test.id,
            verdict,
            trace,
            test_pins,
            policy.effective_pins(test_pins, trace.read_params()),
            classification or classify_test(trace),
            frozenset(recorder.reads) if recorder else None,
        )

    report = SuiteReport(policy=str(policy))
    if parallel <= 1:
        for test in tests:
            try:
                report.results.append(one(test))
            except HarnessError as exc:
                report.complete, report.error = False, str(exc)
                raise HarnessError(str(exc), partial_report=report) from exc
        return report

    with ThreadPoolExecutor(max_workers=parallel) as pool:
        futures = [pool.submit(one, t) for t in tests]
        for fut in futures:
            try:
                report.results.append(fut.result())
            except HarnessError as exc:
                report.complete, report.error = False, str(exc)
                for rest in futures:
                    rest.cancel()
                raise HarnessError(str(exc), partial_report=report) from exc
    return report
