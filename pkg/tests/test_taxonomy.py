import io
import re
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_taxonomy
from fostrends.taxonomy import (
    FieldOfStudy,
    Taxonomy,
    TaxonomyParseError,
    TaxonomyValidationError,
    UnknownFieldError,
    ancestors,
    dumps_taxonomy,
    leaves,
    load_taxonomy,
    validate,
)
from fostrends.trends import load_counts

MINIMAL = b"""
[root]
name = Root
keywords = root topic

[left]
name = Left
parents = root
keywords = left thing, Other Thing

[right]
name = Right
parents = root
keywords = right thing
"""


def test_load_minimal():
    t = load_taxonomy(io.BytesIO(MINIMAL))
    assert len(t.nodes) == 3
    assert t.edges == {("root", "left"), ("root", "right")}
    assert t.roots == {"root"}
    assert t["left"].keywords == ("left thing", "other thing")


def test_unknown_edge_endpoint():
    with pytest.raises(TaxonomyValidationError) as exc:
        load_taxonomy(MINIMAL + b"\n[child]\nparents = xyz\nkeywords = c\n")
    assert any("unknown node xyz" in v for v in exc.value.violations)


def test_parse_error_has_line_number():
    with pytest.raises(TaxonomyParseError) as exc:
        load_taxonomy(b"[a]\nkeywords = x\nthis line is junk\n")
    assert exc.value.line == 3


def test_content_before_header():
    with pytest.raises(TaxonomyParseError) as exc:
        load_taxonomy(b"keywords = x\n[a]\n")
    assert exc.value.line == 1


def test_duplicate_node():
    with pytest.raises(TaxonomyParseError, match="duplicate node id 'a'") as exc:
        load_taxonomy(b"[a]\nkeywords = x\n\n[a]\nkeywords = y\n")
    assert exc.value.line == 4


def test_unknown_key_rejected():
    with pytest.raises(TaxonomyParseError, match="colour"):
        load_taxonomy(b"[a]\nkeywords = x\ncolour = red\n")


def test_bad_utf8():
    # 0-based offset of the \xff byte
    with pytest.raises(TaxonomyParseError, match="byte 5"):
        load_taxonomy(b"[a]\nk\xff")


def test_default_taxonomy_node_count(default_taxonomy):
    text = resources.files("fostrends").joinpath("data", "default_taxonomy.ini").read_text("utf-8")
    declared = int(re.search(r"node count: (\d+)", text).group(1))
    assert len(default_taxonomy) == declared == 65
    assert validate(default_taxonomy) == []


def test_default_taxonomy_covers_bundled_totals(default_taxonomy):
    table = load_counts(resources.files("fostrends").joinpath("data", "field_totals.csv").read_bytes())
    assert len(table) == 20
    assert set(table) <= set(default_taxonomy.nodes)


def test_default_taxonomy_has_multi_parent_nodes(default_taxonomy):
    multi = {n for n in default_taxonomy.nodes if len(default_taxonomy.parents(n)) > 1}
    assert {"machine_translation", "summarization", "semantic_search"} <= multi


# validate ------------------------------------------------------------------


def test_validate_acyclic(chain):
    assert validate(chain) == []


def test_validate_two_cycle():
    t = make_taxonomy([("a", "b"), ("b", "a")])
    cycles = [v for v in validate(t) if v.startswith("cycle")]
    assert cycles and "a" in cycles[0] and "b" in cycles[0]


def test_validate_self_loop():
    t = make_taxonomy([("r", "a"), ("a", "a")])
    assert "cycle: a -> a" in validate(t)


def test_validate_leaf_without_keywords():
    t = Taxonomy.build([FieldOfStudy("r", "R", ("x",)), FieldOfStudy("a", "A", ())], [("r", "a")])
    assert validate(t) == ["leaf without keywords: a"]


def test_inner_node_may_lack_keywords():
    t = Taxonomy.build([FieldOfStudy("r", "R", ()), FieldOfStudy("a", "A", ("x",))], [("r", "a")])
    assert validate(t) == []


def test_unreachable_cycle_nodes_reported():
    t = make_taxonomy([("r", "x"), ("a", "b"), ("b", "a")])
    problems = validate(t)
    assert "node a not reachable from any root" in problems


# queries -------------------------------------------------------------------


def test_ancestors_chain(chain):
    assert ancestors(chain, "b") == {"a", "root"}
    assert ancestors(chain, "root") == set()


def test_ancestors_multi_parent():
    t = make_taxonomy([("r", "p1"), ("r", "p2"), ("p1", "x"), ("p2", "x")])
    assert ancestors(t, "x") == {"p1", "p2", "r"}


def test_ancestors_unknown(chain):
    with pytest.raises(UnknownFieldError, match="unknown node zzz"):
        ancestors(chain, "zzz")


def test_leaves(chain, diamond):
    assert leaves(chain) == {"b"}
    assert leaves(diamond) == {"c"}
    assert leaves(make_taxonomy([], extra=["root"])) == {"root"}


# properties ----------------------------------------------------------------


@st.composite
def dags(draw):
    n = draw(st.integers(1, 9))
    ids = [f"n{i}" for i in range(n)]
    edges = set()
    for j in range(1, n):
        # edges only go forward, so the result is acyclic and every node has a root above it
        parents = draw(st.sets(st.integers(0, j - 1), max_size=3))
        edges |= {(ids[p], ids[j]) for p in parents}
    return make_taxonomy(sorted(edges), extra=ids)


@settings(max_examples=60, deadline=None)
@given(dags())
def test_dag_properties(t):
    assert validate(t) == []
    for v in t.nodes:
        assert v not in ancestors(t, v)
    for p, c in t.edges:
        assert ancestors(t, c) >= {p} | ancestors(t, p)


@settings(max_examples=60, deadline=None)
@given(dags())
def test_round_trip(t):
    again = load_taxonomy(dumps_taxonomy(t))
    assert again == t
    assert dumps_taxonomy(again) == dumps_taxonomy(t)


def test_default_round_trip(default_taxonomy):
    assert load_taxonomy(dumps_taxonomy(default_taxonomy)) == default_taxonomy


def test_load_order_irrelevant():
    blocks = MINIMAL.decode().strip().split("\n\n")
    forward = load_taxonomy("\n\n".join(blocks))
    backward = load_taxonomy("\n\n".join(reversed(blocks)))
    assert forward == backward
