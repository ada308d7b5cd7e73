"""Acceptance criteria for the demo deployment.

Each test appends one pass/fail line to the terminal summary before asserting,
so a red criterion still shows its measured value.
"""

import itertools
import json
import random
import time

from cfgtest.cli import cmd_eval
from cfgtest.configio import parse_properties, serialize_properties
from cfgtest.coverage import coverage_stats, dependents_closure, stats_from_counts
from cfgtest.demo import DEFAULT_CONFIG_FILE, REGISTRY_FILE
from cfgtest.harness import ConfigStore, run_suite, run_test
from cfgtest.model import compute_diff
from cfgtest.mutation import generate_corpus
from cfgtest.quality import evaluate_quality
from cfgtest.selection import select_tests, selection_oracle

from conftest import ACCEPTANCE_LINES
from test_coverage import reachability_closure, registry_from_edges


def record(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_identity_transformation(suite, good, policy, registry, sandbox):
    start = time.perf_counter()
    plain = {t.id: run_test(t, ConfigStore(t.conf), registry, sandbox)[0].status for t in suite}
    concretized = run_suite(suite, good, policy, registry, sandbox).statuses()
    elapsed = time.perf_counter() - start
    same = sum(plain[t] == concretized[t] for t in plain)
    ok = same == len(suite) and elapsed < 60
    record(1, ok, f"identity {same}/{len(suite)} verdicts equal, {elapsed:.2f}s")
    assert ok


def test_coverage_soundness(baseline, covmap):
    discrepancies = []
    for r in baseline:
        from_map = {p for p, tests in covmap.entries.items() if r.test_id in tests}
        from_shadow = r.shadow_reads - r.effective_pins
        if from_map != from_shadow:
            discrepancies.append(r.test_id)
    ok = not discrepancies and len(baseline) > 0
    record(2, ok, f"coverage vs shadow recorder: {len(discrepancies)} discrepancies over {len(baseline)} tests")
    assert ok, discrepancies


def single_param_mutants(registry, good, want=200):
    unique = {}
    for seed in itertools.count():
        for c in generate_corpus(registry, good, 1000, seed)[1:]:
            unique.setdefault((c.mutated_param, c.store.get(c.mutated_param)), c.store)
        if len(unique) >= want:
            return list(unique.values())


def test_selection_safety(suite, good, policy, registry, sandbox, baseline, covmap):
    order = [t.id for t in suite]
    pins = baseline.pins()
    mutants = single_param_mutants(registry, good)
    unsafe, savings = [], []
    for mutant in mutants:
        diff = compute_diff(good, mutant)
        assert len(diff.keys()) == 1
        selected = set(select_tests(diff, covmap, registry, order).selected)
        changed = selection_oracle(suite, good, mutant, policy, registry, sandbox, pins=pins)
        if not changed <= selected:
            unsafe.append((diff.to_dict(), sorted(changed - selected)))
        savings.append(1 - len(selected) / len(order))
    mean = sum(savings) / len(savings)
    ok = len(mutants) >= 200 and not unsafe and mean >= 0.30
    record(3, ok, f"{len(mutants)} diffs, {len(mutants) - len(unsafe)} safe, mean selected fraction "
                  f"{1 - mean:.1%}, mean tests skipped {mean:.1%}")
    assert ok, unsafe[:5]


def upper_triangular_dags(n):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for mask in range(1 << len(pairs)):
        yield [p for k, p in enumerate(pairs) if mask >> k & 1]


def test_dependency_closure(registry, covmap, suite):
    order = [t.id for t in suite]
    misses = []
    for edge in registry.edges:
        diff = compute_diff(ConfigStore({edge.dependee: "a"}), ConfigStore({edge.dependee: "b"}))
        selected = set(select_tests(diff, covmap, registry, order).selected)
        if not covmap.tests_for(edge.dependent) <= selected:
            misses.append(edge)
    # Every DAG on n nodes has a topological order, so the upper-triangular
    # edge sets cover all of them up to relabeling; both orientations are run.
    graphs = mismatches = 0
    for n in range(1, 7):
        for edges in upper_triangular_dags(n):
            for oriented in (edges, [(b, a) for a, b in edges]):
                reg = registry_from_edges(n, oriented)
                for changed in [set(), set(range(n))] + [{i} for i in range(n)]:
                    got = dependents_closure({f"n{c}" for c in changed}, reg)
                    if got != reachability_closure(n, oriented, changed):
                        mismatches += 1
                graphs += 1
    ok = not misses and mismatches == 0 and len(registry.edges) > 0
    record(4, ok, f"{len(registry.edges)} demo edges, {len(misses)} misses; "
                  f"{graphs} graphs up to 6 nodes, {mismatches} closure mismatches")
    assert ok, misses


def test_misconfiguration_detection(suite, good, policy, registry, sandbox, baseline, covmap):
    corpus = generate_corpus(registry, good, 60, 0, tests=suite, sandbox=sandbox)
    bad = [c for c in corpus if c.label == "bad"]
    report = evaluate_quality(suite, corpus, covmap, registry, policy, sandbox, pins=baseline.pins())
    legal = report.legal_misconfigurations()
    spanned = len({c.mutated_param for c in bad})
    ok = (len(bad) >= 30 and spanned >= 10 and report.fn_rate <= 0.10
          and report.false_positives == 0 and len(legal) >= 1)
    record(5, ok, f"{len(bad)} mutants over {spanned} params, FN {report.false_negatives} "
                  f"({report.fn_rate:.1%}), FP {report.false_positives}, {len(legal)} legal misconfigurations")
    assert ok


def test_table_format(covmap, registry, baseline):
    row = stats_from_counts(387, 373)
    classes = {r.classification for r in baseline}
    demo = coverage_stats(covmap, registry)
    ok = row.percentage == 96.4 and row.cell() == "373 (96.4%)" and classes == {"set", "get-only"}
    record(6, ok, f"row '{row}', demo classes {sorted(classes)}, demo coverage {demo.cell()} of {demo.total_params}")
    assert ok


KEY_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789_-"


def random_store(rng):
    def key():
        return ".".join("".join(rng.choices(KEY_CHARS, k=rng.randint(1, 6))) for _ in range(rng.randint(1, 3)))

    def value():
        chars = [chr(rng.choice([rng.randint(0x20, 0x7e), rng.randint(0xa0, 0x2fff)])) for _ in range(rng.randint(0, 12))]
        return "".join(chars).strip()

    return ConfigStore({key(): value() for _ in range(rng.randint(0, 12))})


def test_round_trips():
    rng = random.Random(20260101)
    parsed = sum(parse_properties(serialize_properties(s)) == s for s in (random_store(rng) for _ in range(1000)))
    rebuilt = 0
    for _ in range(1000):
        a = random_store(rng)
        b = random_store(rng) if rng.random() < 0.5 else ConfigStore({**a.to_dict(), **random_store(rng).to_dict()})
        rebuilt += compute_diff(a, b).apply(a) == b
    ok = parsed == 1000 and rebuilt == 1000
    record(7, ok, f"serialize/parse {parsed}/1000, diff/apply {rebuilt}/1000")
    assert ok


def test_eval_determinism(tmp_path, capsys):
    outputs = []
    for i in range(2):
        path = tmp_path / f"eval{i}.json"
        cmd_eval(str(REGISTRY_FILE), str(DEFAULT_CONFIG_FILE), 30, 0, report_path=str(path))
        data = json.loads(path.read_text())
        data.pop("metadata")
        outputs.append(json.dumps(data, indent=2, sort_keys=True).encode())
    capsys.readouterr()
    ok = outputs[0] == outputs[1]
    record(8, ok, f"two eval reports {'byte-identical' if ok else 'differ'} without metadata ({len(outputs[0])} bytes)")
    assert ok
