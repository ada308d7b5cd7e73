import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfgtest.configio import (
    DuplicateKeyWarning,
    PropertiesDocument,
    dump_registry,
    load_registry,
    parse_properties,
    serialize_properties,
)
from cfgtest.errors import (
    DanglingDependency,
    DuplicateParam,
    InvalidParamId,
    MalformedLine,
    ManifestError,
)
from cfgtest.model import ConfigStore, compute_diff

segment = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789_-", min_size=1, max_size=6)
param_ids = st.lists(segment, min_size=1, max_size=3).map(".".join)
# Representable values: no line breaks, nothing the parser would trim.
values = st.text(st.characters(blacklist_characters="\r\n", blacklist_categories=("Cs",)), max_size=12).filter(
    lambda v: v == v.strip()
)
stores = st.dictionaries(param_ids, values, max_size=10).map(ConfigStore)


def test_parse_basic():
    assert parse_properties("a.b=1\n# c\nport = 8020") == ConfigStore({"a.b": "1", "port": "8020"})


def test_duplicate_key_last_wins_with_warning():
    with pytest.warns(DuplicateKeyWarning) as record:
        store = parse_properties("a=1\na=2")
    assert store == ConfigStore({"a": "2"})
    assert len(record) == 1


def test_malformed_line_number():
    with pytest.raises(MalformedLine) as exc:
        parse_properties("justakey")
    assert exc.value.line == 1
    with pytest.raises(MalformedLine) as exc:
        parse_properties("a=1\n\n# x\nnope\n")
    assert exc.value.line == 4


def test_invalid_key_reports_line():
    with pytest.raises(InvalidParamId) as exc:
        parse_properties("a=1\nBad Key=2")
    assert exc.value.line == 2


def test_value_verbatim_after_first_equals():
    assert parse_properties("k = a=b = c ") == ConfigStore({"k": "a=b = c"})
    assert parse_properties("k=") == ConfigStore({"k": ""})


def test_crlf_and_trailing_whitespace():
    assert parse_properties("a=1\r\nb=2  \r\n\r\n   \n") == ConfigStore({"a": "1", "b": "2"})


def test_document_keeps_line_classes():
    doc = PropertiesDocument.parse("# head\n\na=1\n")
    assert [kind for _, kind in doc.lines] == ["comment", "blank", "entry"]
    assert parse_properties(doc.render()) == doc.to_store()


def test_serialize_examples():
    assert serialize_properties(ConfigStore({"b": "2", "a": "1"})) == "a=1\nb=2\n"
    assert serialize_properties(ConfigStore()) == ""
    assert serialize_properties(ConfigStore({"k": ""})) == "k=\n"


@given(stores)
def test_round_trip(store):
    assert parse_properties(serialize_properties(store)) == store


@given(stores, st.lists(st.sampled_from(["", "   ", "# note"]), max_size=4))
def test_blank_lines_and_comments_ignored(store, noise):
    text = "\n".join(noise) + "\n" + serialize_properties(store) + "\n".join(noise)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert parse_properties(text) == store


@given(stores, stores)
def test_file_diff_is_diff_of_parses(s1, s2):
    t1, t2 = serialize_properties(s1), serialize_properties(s2)
    assert compute_diff(parse_properties(t1), parse_properties(t2)) == compute_diff(s1, s2)


MANIFEST = """\
# two params, one edge
param failover.enabled bool default=true
param failover.keyfile path default=<sandbox>/keys/k
dep failover.keyfile enables failover.enabled
"""


class TestManifest:
    def test_load(self):
        reg = load_registry(MANIFEST)
        assert len(reg) == 2
        assert [(e.dependent, e.kind, e.dependee) for e in reg.edges] == [
            ("failover.keyfile", "enables", "failover.enabled")
        ]
        assert reg["failover.keyfile"].default == "<sandbox>/keys/k"

    def test_dangling(self):
        with pytest.raises(DanglingDependency):
            load_registry("param a int\ndep a derives b\n")

    def test_duplicate(self):
        with pytest.raises(DuplicateParam):
            load_registry("param a int\nparam a string\n")

    def test_enum_and_spaces_in_default(self):
        reg = load_registry("param m enum(x,y) default=y\nparam s string default=hello world\n")
        assert reg["m"].type.variants == ("x", "y")
        assert reg["s"].default == "hello world"

    @pytest.mark.parametrize("text,line", [
        ("param a\n", 1),
        ("param a int\nfrob a\n", 2),
        ("param a int\nparam b int\ndep a implies b\n", 3),
        ("param a widget\n", 1),
        ("param a int nodefault\n", 1),
    ])
    def test_syntax_errors_carry_line(self, text, line):
        with pytest.raises(ManifestError) as exc:
            load_registry(text)
        assert exc.value.line == line

    def test_dump_round_trip(self, registry):
        again = load_registry(dump_registry(registry))
        assert list(again) == list(registry)
        assert again.edges == registry.edges
        assert all(again[p] == registry[p] for p in registry)
