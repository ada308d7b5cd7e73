import pytest

from cfgtest.coverage import CoverageMap
from cfgtest.errors import UnknownParam
from cfgtest.harness import TestCase
from cfgtest.model import ConfigDiff, ConfigStore, DependencyEdge, ParamSpec, ParamType, compute_diff, register_params, set_value
from cfgtest.selection import is_stale, select_tests, selection_oracle


@pytest.fixture
def small_registry():
    return register_params([
        ParamSpec("q", ParamType("int")),
        ParamSpec("p", ParamType("int"), dependencies=(DependencyEdge("p", "q", "enables"),)),
        ParamSpec("r", ParamType("int")),
    ])


ORDER = ["t1", "t2", "t3"]


def test_empty_diff(small_registry):
    cov = CoverageMap({"p": {"t1"}}, ORDER)
    result = select_tests(ConfigDiff(), cov, small_registry, ORDER)
    assert result.selected == () and result.reduction == 0


def test_direct_mapping(small_registry):
    cov = CoverageMap({"r": {"t2", "t1"}, "q": {"t3"}}, ORDER)
    result = select_tests(ConfigDiff(changed={"r": ("1", "2")}), cov, small_registry, ORDER)
    assert result.selected == ("t1", "t2")
    assert result.reduction == pytest.approx(2 / 3)


def test_dependent_is_selected(small_registry):
    cov = CoverageMap({"p": {"t1"}, "q": set()}, ORDER)
    result = select_tests(ConfigDiff(changed={"q": ("1", "2")}), cov, small_registry, ORDER)
    assert result.selected == ("t1",)
    assert result.affected_params == {"p", "q"}


def test_removed_counts_as_changed(small_registry):
    cov = CoverageMap({"r": {"t3"}}, ORDER)
    assert select_tests(ConfigDiff(removed={"r": "1"}), cov, small_registry, ORDER).selected == ("t3",)


def test_unknown_param(small_registry):
    with pytest.raises(UnknownParam):
        select_tests(ConfigDiff(added={"zz": "1"}), CoverageMap(), small_registry, ORDER)


def test_new_tests_always_selected(small_registry):
    cov = CoverageMap({"r": {"t1"}}, ["t1", "t2"])
    result = select_tests(ConfigDiff(changed={"q": ("1", "2")}), cov, small_registry, ORDER)
    assert result.selected == ("t3",)
    assert is_stale(cov, ORDER)
    assert not is_stale(CoverageMap({}, ORDER), reversed(ORDER))


def test_json_shape(small_registry):
    cov = CoverageMap({"r": {"t1"}}, ORDER)
    data = select_tests(ConfigDiff(changed={"r": ("1", "2")}), cov, small_registry, ORDER).to_dict()
    assert data == {"schema_version": 1, "selected": ["t1"], "affected_params": ["r"], "reduction": 1 / 3}


class TestOracle:
    def test_identical_configs(self, suite, good, policy, registry, sandbox, baseline):
        assert selection_oracle(suite, good, good, policy, registry, sandbox, pins=baseline.pins()) == set()

    def test_keyfile_flip(self, suite, good, policy, registry, sandbox, baseline, covmap):
        bad = set_value(good, "failover.keyfile", "<sandbox:corrupt>/keys/fence.key")
        changed = selection_oracle(suite, good, bad, policy, registry, sandbox, pins=baseline.pins())
        assert changed == {"fence_with_configured_keyfile", "failover_takes_over_silent_peer"}
        order = [t.id for t in suite]
        assert changed <= set(select_tests(compute_diff(good, bad), covmap, registry, order).selected)

    def test_unread_param(self, suite, good, policy, registry, sandbox, baseline):
        bad = set_value(good, "legacy.compat-mode", "garbage")
        assert selection_oracle(suite, good, bad, policy, registry, sandbox, pins=baseline.pins()) == set()

    def test_only_readers_of_a_one_off_param(self, registry, policy):
        def reads_port(conf):
            assert conf.get("node.port") < 9000

        tests = [TestCase("t1", lambda conf: None), TestCase("t4", reads_port)]
        old = ConfigStore({"node.port": "8020"})
        new = ConfigStore({"node.port": "9999"})
        assert selection_oracle(tests, old, new, policy, registry) == {"t4"}


def test_precision_and_determinism(good, registry, covmap, baseline, suite):
    order = [t.id for t in suite]
    reads = {r.test_id: r.trace.read_params() for r in baseline}
    for pid in registry:
        diff = compute_diff(good, set_value(good, pid, "x-changed"))
        result = select_tests(diff, covmap, registry, order)
        assert result == select_tests(diff, covmap, registry, order)
        for t in result.selected:
            assert reads[t] & result.affected_params
        assert len(result.selected) < len(order)
