"""Demo system under test: a miniature replicated storage node and its tests."""

from importlib import resources
from pathlib import Path

from ..configio import load_registry, parse_properties
from ..model import ConfigStore, ParamRegistry
from .node import FenceOutcome, NodeState, fence, start_node
from .suite import demo_sandbox, demo_suite

FIXTURES_DIR = Path(str(resources.files(__package__) / "fixtures"))
REGISTRY_FILE = FIXTURES_DIR / "registry.manifest"
DEFAULT_CONFIG_FILE = FIXTURES_DIR / "default.properties"


def demo_registry() -> ParamRegistry:
    return load_registry(REGISTRY_FILE.read_text(encoding="utf-8"))


def demo_default_config() -> ConfigStore:
    return parse_properties(DEFAULT_CONFIG_FILE.read_text(encoding="utf-8"))


# Suite-provider protocol used by the CLI (--suite cfgtest.demo).
build_suite = demo_suite
build_sandbox = demo_sandbox

__all__ = [
    "DEFAULT_CONFIG_FILE",
    "FIXTURES_DIR",
    "REGISTRY_FILE",
    "FenceOutcome",
    "NodeState",
    "build_sandbox",
    "build_suite",
    "demo_default_config",
    "demo_registry",
    "demo_sandbox",
    "demo_suite",
    "fence",
    "start_node",
]
