"""Command-line entry point.

Exit codes: 0 success, 1 test failures detected, 2 usage or configuration
error, 3 harness error. JSON goes to stdout (or ``--report``); the human
summary goes to stderr.
"""

from __future__ import annotations

import argparse
import importlib
import json
import sys
import warnings
from pathlib import Path
from typing import Sequence

from .configio import DuplicateKeyWarning, load_registry, parse_properties
from .coverage import CoverageMap, build_coverage_map, coverage_stats
from .errors import CfgTestError, HarnessError, SeedConfigFails, UnknownParam
from .harness import ConcretizationPolicy, SuiteReport, run_suite
from .model import compute_diff
from .mutation import generate_corpus, save_corpus
from .quality import evaluate_quality
from .selection import is_stale, select_tests

EXIT_OK, EXIT_FAILURES, EXIT_USAGE, EXIT_HARNESS = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _dumps(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _emit(data: dict, path: str | None) -> None:
    text = _dumps(data)
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {what} {path}: {exc.strerror}") from None


def _load_registry(path: str):
    try:
        return load_registry(_read(path, "registry"))
    except CfgTestError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_config(path: str):
    text = _read(path, "config")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DuplicateKeyWarning)
        try:
            store = parse_properties(text)
        except CfgTestError as exc:
            raise UsageError(f"{path}: {exc}") from None
    for w in caught:
        _log(f"warning: {path}: {w.message}")
    return store


def _load_suite(name: str):
    try:
        module = importlib.import_module(name)
    except ImportError as exc:
        raise UsageError(f"cannot import suite module {name}: {exc}") from None
    if not hasattr(module, "build_suite"):
        raise UsageError(f"suite module {name} has no build_suite()")
    sandbox = module.build_sandbox() if hasattr(module, "build_sandbox") else None
    return module.build_suite(), sandbox


def _policy(flag: str) -> ConcretizationPolicy:
    try:
        return ConcretizationPolicy.parse(flag)
    except (ValueError, CfgTestError) as exc:
        raise UsageError(str(exc)) from None


def _check_known(store, registry, path: str) -> None:
    unknown = sorted(k for k in store if k not in registry)
    if unknown:
        raise UsageError(f"{path}: unregistered parameter(s): {', '.join(unknown)}")


def cmd_run(registry_file: str, config_file: str, policy: str = "get-only",
            report_path: str | None = None, *, suite: str = "cfgtest.demo",
            coverage_path: str | None = None, timeout_ms: int = 30000, parallel: int = 1) -> int:
    registry = _load_registry(registry_file)
    config = _load_config(config_file)
    _check_known(config, registry, config_file)
    tests, sandbox = _load_suite(suite)
    try:
        report = run_suite(tests, config, _policy(policy), registry, sandbox,
                           timeout_s=timeout_ms / 1000, parallel=parallel)
    except HarnessError as exc:
        _log(f"harness error: {exc}")
        if exc.partial_report is not None:
            _emit(exc.partial_report.to_dict(), report_path)
        return EXIT_HARNESS
    _emit(report.to_dict(), report_path)
    if coverage_path:
        covmap = build_coverage_map(report.traces(), report.effective_pins(), registry)
        Path(coverage_path).write_text(covmap.dumps(), encoding="utf-8")
    counts = report.counts
    _log(f"{len(report)} tests: {counts['pass']} passed, {counts['fail']} failed, {counts['error']} errors")
    for r in report:
        if r.verdict.status != "pass":
            _log(f"  {r.verdict.status.upper():5} {r.test_id}: {r.verdict.detail}")
    return EXIT_OK if report.ok else EXIT_FAILURES


def cmd_coverage(registry_file: str, report_path: str, coverage_path: str | None = None) -> int:
    registry = _load_registry(registry_file)
    try:
        report = SuiteReport.from_dict(json.loads(_read(report_path, "report")))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{report_path}: not a suite report ({exc})") from None
    covmap = build_coverage_map(report.traces(), report.effective_pins(), registry)
    if coverage_path:
        Path(coverage_path).write_text(covmap.dumps(), encoding="utf-8")
    stats = coverage_stats(covmap, registry)
    _emit(stats.to_dict(), None)
    _log(f"parameters exercised: {stats.exercised_params}/{stats.total_params} ({stats.percentage:.1f}%)")
    if stats.uncovered:
        _log(f"uncovered: {', '.join(sorted(stats.uncovered))}")
    return EXIT_OK


def cmd_select(registry_file: str, old_config: str, new_config: str, coverage_file: str,
               *, suite: str = "cfgtest.demo") -> int:
    registry = _load_registry(registry_file)
    old, new = _load_config(old_config), _load_config(new_config)
    try:
        covmap = CoverageMap.from_dict(json.loads(_read(coverage_file, "coverage map")))
    except (ValueError, AttributeError) as exc:
        raise UsageError(f"{coverage_file}: not a coverage map ({exc})") from None
    tests, _ = _load_suite(suite)
    order = [t.id for t in tests]
    if is_stale(covmap, order):
        _log("warning: coverage map was built from a different test suite; rerun `cfgtest run --coverage`")
    try:
        result = select_tests(compute_diff(old, new), covmap, registry, order)
    except UnknownParam as exc:
        raise UsageError(f"diff touches {exc}") from None
    _emit(result.to_dict(), None)
    _log(f"selected {len(result.selected)}/{len(order)} tests")
    return EXIT_OK


def cmd_eval(registry_file: str, good_config: str, budget: int = 30, seed: int = 0,
             *, report_path: str | None = None, policy: str = "get-only",
             suite: str = "cfgtest.demo", corpus_dir: str | None = None,
             timeout_ms: int = 30000, parallel: int = 1) -> int:
    registry = _load_registry(registry_file)
    good = _load_config(good_config)
    _check_known(good, registry, good_config)
    tests, sandbox = _load_suite(suite)
    pol = _policy(policy)
    timeout_s = timeout_ms / 1000
    try:
        baseline = run_suite(tests, good, pol, registry, sandbox, timeout_s=timeout_s, parallel=parallel)
        failing = [r.test_id for r in baseline if r.verdict.status != "pass"]
        if failing:
            raise SeedConfigFails(failing)
        covmap = build_coverage_map(baseline.traces(), baseline.effective_pins(), registry)
        corpus = generate_corpus(registry, good, budget, seed)
        if corpus_dir:
            save_corpus(corpus, corpus_dir)
        quality = evaluate_quality(tests, corpus, covmap, registry, pol, sandbox,
                                   pins=baseline.pins(), timeout_s=timeout_s, parallel=parallel)
    except SeedConfigFails as exc:
        _log(f"error: {exc}")
        return EXIT_FAILURES
    except HarnessError as exc:
        _log(f"harness error: {exc}")
        return EXIT_HARNESS
    data = quality.to_dict()
    data["seed"], data["budget"], data["policy"] = seed, budget, str(pol)
    _emit(data, report_path)
    _log(quality.summary())
    return EXIT_FAILURES if quality.false_negatives + quality.false_positives else EXIT_OK


def cmd_diff(old_config: str, new_config: str) -> int:
    diff = compute_diff(_load_config(old_config), _load_config(new_config))
    _emit({"schema_version": 1, **diff.to_dict()}, None)
    _log(f"{len(diff.changed)} changed, {len(diff.added)} added, {len(diff.removed)} removed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfgtest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, config=False, policy=False, run=False):
        p.add_argument("--registry", required=True, help="registry manifest")
        if config:
            p.add_argument("--config", required=True, help="configuration file to test")
        if policy:
            p.add_argument("--policy", default="get-only",
                           help="all | get-only | listed=<p1,p2> (default: get-only)")
        if run:
            p.add_argument("--suite", default="cfgtest.demo",
                           help="module providing build_suite() (default: cfgtest.demo)")
            p.add_argument("--timeout-ms", type=int, default=30000, help="per-test timeout (default: 30000)")
            p.add_argument("--parallel", type=int, default=1, help="worker threads (default: 1)")

    p = sub.add_parser("run", help="run the suite concretized with a configuration")
    common(p, config=True, policy=True, run=True)
    p.add_argument("--report", help="write the suite report here instead of stdout")
    p.add_argument("--coverage", help="also write the coverage map here")

    p = sub.add_parser("coverage", help="coverage map and statistics from a suite report")
    common(p)
    p.add_argument("--report", required=True, help="suite report from `cfgtest run`")
    p.add_argument("--coverage", help="write the coverage map here")

    p = sub.add_parser("select", help="select tests affected by a configuration diff")
    common(p)
    p.add_argument("--old", required=True)
    p.add_argument("--new", required=True)
    p.add_argument("--coverage", required=True, help="coverage map JSON")
    p.add_argument("--suite", default="cfgtest.demo")

    p = sub.add_parser("eval", help="score suite quality on generated misconfigurations")
    common(p, config=True, policy=True, run=True)
    p.add_argument("--budget", type=int, default=30, help="number of mutants (default: 30)")
    p.add_argument("--seed", type=int, default=0, help="corpus seed (default: 0)")
    p.add_argument("--report", help="write the quality report here instead of stdout")
    p.add_argument("--corpus-dir", help="also persist the corpus in this directory")

    p = sub.add_parser("diff", help="diff two configuration files")
    p.add_argument("--old", required=True)
    p.add_argument("--new", required=True)

    sub.add_parser("fixtures", help="print the demo fixtures directory")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.registry, args.config, args.policy, args.report, suite=args.suite,
                           coverage_path=args.coverage, timeout_ms=args.timeout_ms, parallel=args.parallel)
        if args.command == "coverage":
            return cmd_coverage(args.registry, args.report, args.coverage)
        if args.command == "select":
            return cmd_select(args.registry, args.old, args.new, args.coverage, suite=args.suite)
        if args.command == "eval":
            return cmd_eval(args.registry, args.config, args.budget, args.seed,
                            report_path=args.report, policy=args.policy, suite=args.suite,
                            corpus_dir=args.corpus_dir, timeout_ms=args.timeout_ms, parallel=args.parallel)
        if args.command == "diff":
            return cmd_diff(args.old, args.new)
        from .demo import FIXTURES_DIR

        print(FIXTURES_DIR)
        return EXIT_OK
    except UsageError as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
