import json
import subprocess
import sys

import pytest

from cfgtest.cli import main
from cfgtest.demo import DEFAULT_CONFIG_FILE, REGISTRY_FILE

REG = str(REGISTRY_FILE)
DEFAULT = str(DEFAULT_CONFIG_FILE)


def strip_metadata(data):
    data = dict(data)
    data.pop("metadata", None)
    return data


@pytest.fixture
def variant(tmp_path):
    """Write DEFAULT with some lines replaced; returns the new path."""
    base = DEFAULT_CONFIG_FILE.read_text()

    def make(name, **overrides):
        lines = []
        for line in base.splitlines():
            key = line.split("=", 1)[0].strip()
            lines.append(f"{key}={overrides.pop(key)}" if key in overrides else line)
        lines += [f"{k}={v}" for k, v in overrides.items()]
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return str(path)

    return make


def test_run_default_config(capsys, tmp_path):
    cov = tmp_path / "cov.json"
    assert main(["run", "--registry", REG, "--config", DEFAULT, "--coverage", str(cov)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["summary"] == {"error": 0, "fail": 0, "pass": 25, "total": 25}
    assert json.loads(cov.read_text())["schema_version"] == 1


def test_run_broken_keyfile(capsys, variant, tmp_path):
    bad = variant("bad.properties", **{"failover.keyfile": "<sandbox:corrupt>/keys/fence.key"})
    out = tmp_path / "report.json"
    assert main(["run", "--registry", REG, "--config", bad, "--report", str(out)]) == 1
    report = json.loads(out.read_text())
    failing = {r["test_id"] for r in report["results"] if r["status"] != "pass"}
    assert "fence_with_configured_keyfile" in failing
    assert "fence_with_configured_keyfile" in capsys.readouterr().err


def test_run_malformed_config(capsys, tmp_path):
    bad = tmp_path / "bad.properties"
    bad.write_text("node.port=1\nno equals sign here\n")
    assert main(["run", "--registry", REG, "--config", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_run_unknown_param(variant):
    assert main(["run", "--registry", REG, "--config", variant("x.properties", **{"no.such": "1"})]) == 2


def test_bad_policy(variant):
    assert main(["run", "--registry", REG, "--config", DEFAULT, "--policy", "some"]) == 2


def test_missing_file(tmp_path):
    assert main(["run", "--registry", str(tmp_path / "nope"), "--config", DEFAULT]) == 2


def test_usage_error_from_argparse():
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 2


@pytest.fixture(scope="module")
def coverage_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cov") / "cov.json"
    assert main(["run", "--registry", REG, "--config", DEFAULT, "--coverage", str(path), "--report",
                 str(path.with_name("report.json"))]) == 0
    return path


def test_coverage_command(capsys, coverage_file):
    assert main(["coverage", "--registry", REG, "--report", str(coverage_file.with_name("report.json"))]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats == {
        "schema_version": 1, "exercised": 14, "percentage": 93.3, "total": 15, "uncovered": ["legacy.compat-mode"],
    }


def test_select(capsys, variant, coverage_file):
    new = variant("new.properties", **{"io.compression": "none"})
    assert main(["select", "--registry", REG, "--old", DEFAULT, "--new", new, "--coverage", str(coverage_file)]) == 0
    captured = capsys.readouterr()
    result = json.loads(captured.out)
    assert result["affected_params"] == ["io.compression"]
    assert 0 < len(result["selected"]) < 25
    assert "warning" not in captured.err


def test_select_unknown_param(variant, coverage_file):
    new = variant("new.properties", **{"no.such": "1"})
    assert main(["select", "--registry", REG, "--old", DEFAULT, "--new", new, "--coverage", str(coverage_file)]) == 2


def test_select_stale_map(capsys, tmp_path, variant):
    stale = tmp_path / "stale.json"
    stale.write_text(json.dumps({"schema_version": 1, "tests": ["gone"], "coverage": {"node.port": ["gone"]}}))
    new = variant("new.properties", **{"node.port": "9000"})
    assert main(["select", "--registry", REG, "--old", DEFAULT, "--new", new, "--coverage", str(stale)]) == 0
    captured = capsys.readouterr()
    assert "stale" in captured.err or "different test suite" in captured.err
    # without a usable trace every current test is selected
    assert len(json.loads(captured.out)["selected"]) == 25


def test_diff_identical(capsys):
    assert main(["diff", "--old", DEFAULT, "--new", DEFAULT]) == 0
    assert json.loads(capsys.readouterr().out) == {"added": {}, "changed": {}, "removed": {}, "schema_version": 1}


def test_diff_duplicate_warning(capsys, tmp_path):
    dup = tmp_path / "dup.properties"
    dup.write_text("a=1\na=2\n")
    assert main(["diff", "--old", str(dup), "--new", str(dup)]) == 0
    assert "warning" in capsys.readouterr().err


def test_eval_budget_zero(capsys):
    assert main(["eval", "--registry", REG, "--config", DEFAULT, "--budget", "0"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["false_negatives"]["count"] == 0 and data["false_positives"]["count"] == 0


def test_eval_bad_seed_config(variant):
    bad = variant("bad.properties", **{"node.port": "0"})
    assert main(["eval", "--registry", REG, "--config", bad, "--budget", "3"]) == 1


def test_eval_saves_corpus(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    main(["eval", "--registry", REG, "--config", DEFAULT, "--budget", "4", "--corpus-dir", str(corpus)])
    assert (corpus / "index.json").exists()
    assert len(list(corpus.glob("*.properties"))) == 5


def test_run_output_deterministic(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        main(["run", "--registry", REG, "--config", DEFAULT, "--report", str(path)])
        outs.append(json.dumps(strip_metadata(json.loads(path.read_text())), sort_keys=True))
    assert outs[0] == outs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cfgtest", "fixtures"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().endswith("fixtures")
