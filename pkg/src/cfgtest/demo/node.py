"""A miniature replicated storage node used as the system under test.

Parameters are read lazily, at the point of use, through the instrumented
``Configuration`` handle. Nothing touches the network; ports are recorded and
replicas are placed on simulated datanodes.
"""

from __future__ import annotations

import os
import re
import stat
import zlib
from dataclasses import dataclass, field

from ..harness import Configuration

DATANODES = ("dn-a", "dn-b", "dn-c", "dn-d", "dn-e")
PHYSICAL_MEMORY_MB = 65536
MAX_HEARTBEAT_TIMEOUT_MS = 600_000
MAX_HANDLERS = 1024
MIN_BLOCK, MAX_BLOCK = 512, 1 << 24

KEY_MAGIC = "CTKEY1:"
_KEY_RE = re.compile(re.escape(KEY_MAGIC) + r"[0-9a-f]{32}")
_NAME_RE = re.compile(r"[a-z][a-z0-9-]{0,62}")


class NodeError(RuntimeError):
    pass


class ReadOnlyError(NodeError):
    pass


class FenceError(NodeError):
    pass


class KeyfileMissing(FenceError):
    pass


class KeyfileUnreadable(FenceError):
    pass


class KeyfileCorrupt(FenceError):
    pass


def _owner_can(path: str, bit: int) -> bool:
    # Checks mode bits rather than os.access so the result does not depend on
    # running as root.
    return bool(os.stat(path).st_mode & bit)


def parse_key(text: str) -> str:
    """Key id from a key file body: ``CTKEY1:`` + 32 lowercase hex digits."""
    body = text.strip()
    if not _KEY_RE.fullmatch(body):
        raise KeyfileCorrupt("key file does not contain a well-formed key")
    return body[len(KEY_MAGIC):]


def make_key(seed: int) -> bytes:
    return f"{KEY_MAGIC}{seed:032x}\n".encode()


@dataclass
class NodeState:
    conf: Configuration
    name: str
    data_dir: str
    port: int
    blocks: dict[str, int] = field(default_factory=dict)
    active: bool = True

    @property
    def endpoint(self) -> str:
        return f"{self.name}:{self.port}"

    # Lazily-read settings -------------------------------------------------

    @property
    def read_only(self) -> bool:
        return self.conf.get("node.read-only")

    def block_size(self) -> int:
        size = self.conf.get("io.block-size")
        if not MIN_BLOCK <= size <= MAX_BLOCK or size & (size - 1):
            raise NodeError(f"block size {size} must be a power of two in [{MIN_BLOCK}, {MAX_BLOCK}]")
        return size

    # Data path ------------------------------------------------------------

    def write(self, key: str, data: bytes) -> int:
        """Store ``data`` in block-sized chunks; returns the chunk count."""
        if self.read_only:
            raise ReadOnlyError(f"{self.name} is read-only")
        codec = Codec.from_conf(self.conf)
        size = self.block_size()
        chunks = [data[i:i + size] for i in range(0, len(data), size)] or [b""]
        block_dir = os.path.join(self.data_dir, "blocks")
        os.makedirs(block_dir, exist_ok=True)
        for i, chunk in enumerate(chunks):
            with open(os.path.join(block_dir, f"{key}.{i}"), "wb") as fh:
                fh.write(codec.compress(chunk))
        self.blocks[key] = len(chunks)
        return len(chunks)

    def read(self, key: str) -> bytes:
        codec = Codec.from_conf(self.conf)
        block_dir = os.path.join(self.data_dir, "blocks")
        out = []
        for i in range(self.blocks[key]):
            with open(os.path.join(block_dir, f"{key}.{i}"), "rb") as fh:
                out.append(codec.decompress(fh.read()))
        return b"".join(out)

    def snapshot(self) -> list[str]:
        block_dir = os.path.join(self.data_dir, "blocks")
        if not os.path.isdir(block_dir):
            return []
        return sorted(os.listdir(block_dir))


def _check_dir_path(path: str, what: str) -> None:
    if not os.path.isabs(path):
        raise NodeError(f"{what} {path!r} must be an absolute path")


def start_node(conf: Configuration) -> NodeState:
    """Bring up a node: validate its name, prepare the data directory, record the port."""
    name = conf.get("node.name")
    if not _NAME_RE.fullmatch(name):
        raise NodeError(f"invalid node name {name!r}")

    data_dir = conf.get("node.data-dir")
    _check_dir_path(data_dir, "data dir")
    if os.path.lexists(data_dir):
        if not os.path.isdir(data_dir):
            raise NodeError(f"data dir {data_dir} is not a directory")
        if not _owner_can(data_dir, stat.S_IWUSR):
            raise PermissionError(f"data dir {data_dir} is not writable")
    else:
        # Parent must already exist; the node creates one level only.
        os.mkdir(data_dir)
    with open(os.path.join(data_dir, "VERSION"), "w") as fh:
        fh.write(f"{name}\n")

    port = conf.get("node.port")
    return NodeState(conf, name, data_dir, port)


@dataclass(frozen=True)
class FenceOutcome:
    success: bool
    fenced: str
    key_id: str = ""


def fence(node: NodeState, conf: Configuration, target: str = "standby") -> FenceOutcome:
    """Fence ``target`` using the configured key file.

    The key file must exist, be owner-readable and contain a well-formed key.
    """
    if not conf.get("failover.enabled"):
        raise FenceError("fencing requested while failover is disabled")
    path = conf.get("failover.keyfile")
    if not os.path.isabs(path) or not os.path.exists(path):
        raise KeyfileMissing(f"key file {path!r} does not exist")
    if not os.path.isfile(path) or not _owner_can(path, stat.S_IRUSR):
        raise KeyfileUnreadable(f"key file {path!r} is not readable")
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError:
        raise KeyfileCorrupt(f"key file {path!r} is not text") from None
    return FenceOutcome(True, target, parse_key(text))


def failover(node: NodeState, conf: Configuration, silent_ms: int) -> str:
    """Decide who is active after the peer has been silent for ``silent_ms``."""
    monitor = HeartbeatMonitor(conf)
    if monitor.is_alive(0, silent_ms):
        return "peer"
    if conf.get("failover.enabled"):
        fence(node, conf)
        node.active = True
        return node.name
    return "none"


class Codec:
    def __init__(self, name: str):
        self.name = name

    @classmethod
    def from_conf(cls, conf: Configuration) -> "Codec":
        return cls(conf.get("io.compression"))

    def compress(self, data: bytes) -> bytes:
        if self.name == "zlib-like":
            return zlib.compress(data, 6)
        if self.name == "lz4-like":
            return _rle_encode(data)
        return data

    def decompress(self, data: bytes) -> bytes:
        if self.name == "zlib-like":
            return zlib.decompress(data)
        if self.name == "lz4-like":
            return _rle_decode(data)
        return data


def _rle_encode(data: bytes) -> bytes:
    out = bytearray()
    i = 0
    while i < len(data):
        j = i
        while j < len(data) and j - i < 255 and data[j] == data[i]:
            j += 1
        out += bytes((j - i, data[i]))
        i = j
    return bytes(out)


def _rle_decode(data: bytes) -> bytes:
    out = bytearray()
    for i in range(0, len(data), 2):
        out += bytes((data[i + 1],)) * data[i]
    return bytes(out)


class ReplicaPlanner:
    def __init__(self, conf: Configuration):
        self.conf = conf

    def plan(self, block_ids: list[str]) -> dict[str, list[str]]:
        replication = self.conf.get("node.replication")
        if replication < 0:
            raise NodeError(f"replication {replication} is negative")
        if replication > len(DATANODES):
            raise NodeError(f"replication {replication} exceeds {len(DATANODES)} datanodes")
        # Spread blocks in stripes of len(DATANODES) // replication.
        stripe = len(DATANODES) // replication
        placement = {}
        for i, block in enumerate(block_ids):
            start = (i % stripe) * replication + i // stripe
            placement[block] = [DATANODES[(start + k) % len(DATANODES)] for k in range(replication)]
        return placement


class HeartbeatMonitor:
    def __init__(self, conf: Configuration):
        self.interval = conf.get("heartbeat.interval-ms")
        self.timeout = conf.get("heartbeat.timeout-ms")
        if self.timeout > MAX_HEARTBEAT_TIMEOUT_MS:
            raise NodeError(f"heartbeat timeout {self.timeout} ms exceeds {MAX_HEARTBEAT_TIMEOUT_MS} ms")
        if self.missed_beats_allowed() < 2:
            raise NodeError("heartbeat timeout must cover at least two intervals")

    def missed_beats_allowed(self) -> int:
        return self.timeout // self.interval

    def is_alive(self, last_seen_ms: int, now_ms: int) -> bool:
        return now_ms - last_seen_ms <= self.timeout


class BlockCache:
    def __init__(self, conf: Configuration):
        heap = conf.get("heap.mb")
        if not 64 <= heap <= PHYSICAL_MEMORY_MB:
            raise NodeError(f"heap {heap} MB outside [64, {PHYSICAL_MEMORY_MB}]")
        cache = conf.get("cache.mb")
        if not 1 <= cache <= heap // 2:
            raise NodeError(f"cache {cache} MB must be within [1, heap/2 = {heap // 2}]")
        self.capacity = cache * 1024 * 1024
        self._items: dict[str, bytes] = {}
        self._used = 0

    def put(self, key: str, value: bytes) -> None:
        if len(value) > self.capacity:
            return
        self._items.pop(key, None)
        self._items[key] = value
        self._used = sum(len(v) for v in self._items.values())
        while self._used > self.capacity:
            oldest = next(iter(self._items))
            self._used -= len(self._items.pop(oldest))

    def get(self, key: str) -> bytes | None:
        return self._items.get(key)


class RpcServer:
    def __init__(self, conf: Configuration):
        count = conf.get("rpc.handler-count")
        if not 1 <= count <= MAX_HANDLERS:
            raise NodeError(f"handler count {count} outside [1, {MAX_HANDLERS}]")
        self.handlers = [[] for _ in range(count)]

    def dispatch(self, requests: list[str]) -> dict[str, int]:
        served = {}
        for i, req in enumerate(requests):
            slot = i % len(self.handlers)
            self.handlers[slot].append(req)
            served[req] = slot
        return served
