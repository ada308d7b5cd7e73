"""Existing unit tests of the demo node, reusable as configuration tests.

Get-only tests work with whatever values the configuration holds. Set tests
pin specific values with ``conf.set`` the way hand-written unit tests do.
"""

from __future__ import annotations

from ..harness import Configuration, TestCase
from ..sandbox import FixtureFile, SandboxSpec
from .node import (
    DATANODES,
    BlockCache,
    Codec,
    HeartbeatMonitor,
    ReadOnlyError,
    ReplicaPlanner,
    RpcServer,
    failover,
    fence,
    make_key,
    start_node,
)

FENCE_KEY = make_key(0x5EED)
ALT_KEY = make_key(0xA17)

SANDBOX = SandboxSpec(
    files={
        "keys/fence.key": FixtureFile(FENCE_KEY, 0o600),
        "keys/alt.key": FixtureFile(ALT_KEY, 0o600),
    },
)

PAYLOAD = b"abc" * 1000 + bytes(range(256)) + b"\x00" * 2000


# get-only tests ----------------------------------------------------------

def node_starts_with_data_dir(conf: Configuration):
    node = start_node(conf)
    with open(f"{node.data_dir}/VERSION") as fh:
        assert fh.read().strip() == node.name


def node_endpoint_uses_port(conf: Configuration):
    node = start_node(conf)
    assert node.endpoint == f"{conf.get('node.name')}:{conf.get('node.port')}"


def node_name_is_registered(conf: Configuration):
    node = start_node(conf)
    members = conf.sandbox.path("members")
    members.write_text(node.name + "\n")
    assert members.read_text().split() == [node.name]


def replica_plan_covers_all_blocks(conf: Configuration):
    blocks = [f"blk-{i}" for i in range(12)]
    plan = ReplicaPlanner(conf).plan(blocks)
    replication = conf.get("node.replication")
    assert set(plan) == set(blocks)
    for nodes in plan.values():
        assert len(nodes) == replication and len(set(nodes)) == replication


def replica_plan_is_balanced(conf: Configuration):
    plan = ReplicaPlanner(conf).plan([f"blk-{i}" for i in range(len(DATANODES) * 4)])
    load = {dn: 0 for dn in DATANODES}
    for nodes in plan.values():
        for dn in nodes:
            load[dn] += 1
    assert max(load.values()) - min(load.values()) <= 1, f"unbalanced placement {load}"


def heartbeat_marks_dead_after_timeout(conf: Configuration):
    monitor = HeartbeatMonitor(conf)
    assert monitor.is_alive(0, monitor.timeout)
    assert not monitor.is_alive(0, monitor.timeout + 1)


def heartbeat_tolerates_missed_beats(conf: Configuration):
    monitor = HeartbeatMonitor(conf)
    assert monitor.is_alive(0, 2 * monitor.interval)


def fence_with_configured_keyfile(conf: Configuration):
    node = start_node(conf)
    if conf.get("failover.enabled"):
        outcome = fence(node, conf)
        assert outcome.success


def failover_takes_over_silent_peer(conf: Configuration):
    node = start_node(conf)
    timeout = conf.get("heartbeat.timeout-ms")
    assert failover(node, conf, timeout) == "peer"
    winner = failover(node, conf, timeout + 1)
    assert winner == (node.name if conf.get("failover.enabled") else "none")


def cache_fits_in_heap(conf: Configuration):
    cache = BlockCache(conf)
    assert cache.capacity <= conf.get("heap.mb") * 1024 * 1024


def cache_serves_hits(conf: Configuration):
    cache = BlockCache(conf)
    cache.put("a", b"x" * 1024)
    assert cache.get("a") == b"x" * 1024


def block_write_read_roundtrip(conf: Configuration):
    node = start_node(conf)
    if node.read_only:
        try:
            node.write("k", PAYLOAD)
        except ReadOnlyError:
            return
        return "read-only node accepted a write"
    node.write("k", PAYLOAD)
    assert node.read("k") == PAYLOAD


def codec_roundtrip(conf: Configuration):
    codec = Codec.from_conf(conf)
    assert codec.decompress(codec.compress(PAYLOAD)) == PAYLOAD


def large_write_splits_into_blocks(conf: Configuration):
    node = start_node(conf)
    if node.read_only:
        return
    size = node.block_size()
    chunks = node.write("big", b"z" * (size * 3 + size // 2))
    assert chunks == 4


def snapshot_lists_written_blocks(conf: Configuration):
    node = start_node(conf)
    if node.read_only:
        assert node.snapshot() == []
        return
    node.write("s", b"q" * 10)
    assert node.snapshot() == ["s.0"]


def rpc_dispatches_all_requests(conf: Configuration):
    server = RpcServer(conf)
    served = server.dispatch([f"req-{i}" for i in range(20)])
    assert len(served) == 20
    assert max(served.values()) < conf.get("rpc.handler-count")


# set tests ---------------------------------------------------------------

def fence_skipped_when_failover_disabled(conf: Configuration):
    conf.set("failover.enabled", "false")
    node = start_node(conf)
    assert failover(node, conf, 10**6) == "none"


def fence_with_test_keyfile(conf: Configuration):
    # The hardcoded-value form of the fence test.
    conf.set("failover.keyfile", "<sandbox>/keys/alt.key")
    node = start_node(conf)
    assert fence(node, conf).success


def read_only_rejects_writes(conf: Configuration):
    conf.set("node.read-only", "true")
    node = start_node(conf)
    try:
        node.write("k", b"data")
    except ReadOnlyError:
        return
    return "write was accepted"


def zlib_roundtrip(conf: Configuration):
    conf.set("io.compression", "zlib-like")
    node = start_node(conf)
    node.write("z", PAYLOAD)
    assert node.read("z") == PAYLOAD


def single_replica_plan(conf: Configuration):
    conf.set("node.replication", "1")
    plan = ReplicaPlanner(conf).plan(["a", "b", "c"])
    assert all(len(nodes) == 1 for nodes in plan.values())


def fast_heartbeat(conf: Configuration):
    conf.set("heartbeat.interval-ms", "100")
    conf.set("heartbeat.timeout-ms", "1000")
    monitor = HeartbeatMonitor(conf)
    assert monitor.missed_beats_allowed() == 10
    assert not monitor.is_alive(0, 1001)


def small_cache_evicts(conf: Configuration):
    conf.set("cache.mb", "1")
    cache = BlockCache(conf)
    cache.put("a", b"1" * 600_000)
    cache.put("b", b"2" * 600_000)
    assert cache.get("a") is None and cache.get("b") is not None


def custom_port_endpoint(conf: Configuration):
    conf.set("node.port", "9000")
    node = start_node(conf)
    assert node.endpoint.endswith(":9000")


def tiny_blocks_split(conf: Configuration):
    conf.set("io.block-size", "512")
    node = start_node(conf)
    assert node.write("t", b"w" * 2000) == 4


_GET_ONLY = [
    node_starts_with_data_dir,
    node_endpoint_uses_port,
    node_name_is_registered,
    replica_plan_covers_all_blocks,
    replica_plan_is_balanced,
    heartbeat_marks_dead_after_timeout,
    heartbeat_tolerates_missed_beats,
    fence_with_configured_keyfile,
    failover_takes_over_silent_peer,
    cache_fits_in_heap,
    cache_serves_hits,
    block_write_read_roundtrip,
    codec_roundtrip,
    large_write_splits_into_blocks,
    snapshot_lists_written_blocks,
    rpc_dispatches_all_requests,
]

_SET = [
    fence_skipped_when_failover_disabled,
    fence_with_test_keyfile,
    read_only_rejects_writes,
    zlib_roundtrip,
    single_replica_plan,
    fast_heartbeat,
    small_cache_evicts,
    custom_port_endpoint,
    tiny_blocks_split,
]


def demo_suite() -> list[TestCase]:
    tests = [TestCase(f.__name__, f, ("get-only",)) for f in _GET_ONLY]
    tests += [TestCase(f.__name__, f, ("set",)) for f in _SET]
    return tests


def demo_sandbox() -> SandboxSpec:
    return SANDBOX
