"""Field-of-study taxonomy: a rooted, multi-parent DAG whose nodes carry keywords.

Taxonomy files are INI-style text, one section per field::

    [machine_translation]
    name = Machine Translation
    parents = multilinguality, text_generation
    keywords = machine translation, neural machine translation
    description = optional free text

``parents`` is empty (or omitted) for roots. Keywords are stored lowercase.
Lines starting with ``#`` or ``;`` are comments.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from importlib import resources
from typing import BinaryIO, Iterable

DEFAULT_TAXONOMY = "default_taxonomy.ini"


class TaxonomyError(Exception):
    """Base class for taxonomy failures."""


class TaxonomyParseError(TaxonomyError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class TaxonomyValidationError(TaxonomyError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid taxonomy:\n  " + "\n  ".join(violations))


class UnknownFieldError(TaxonomyError, KeyError):
    def __str__(self) -> str:
        return f"unknown node {self.args[0]}"


@dataclass(frozen=True)
class FieldOfStudy:
    id: str
    display_name: str
    keywords: tuple[str, ...] = ()
    description: str | None = None


@dataclass(frozen=True)
class Taxonomy:
    """Immutable field-of-study DAG.

    ``edges`` holds ``(parent_id, child_id)`` pairs. Construction does not
    validate; use :func:`validate` or :func:`load_taxonomy`.
    """

    nodes: dict[str, FieldOfStudy]
    edges: frozenset[tuple[str, str]]
    _parents: dict[str, frozenset[str]] = field(init=False, repr=False, compare=False)
    _children: dict[str, frozenset[str]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        parents: dict[str, set[str]] = {nid: set() for nid in self.nodes}
        children: dict[str, set[str]] = {nid: set() for nid in self.nodes}
        for p, c in self.edges:
            parents.setdefault(c, set()).add(p)
            children.setdefault(p, set()).add(c)
        object.__setattr__(self, "_parents", {k: frozenset(v) for k, v in parents.items()})
        object.__setattr__(self, "_children", {k: frozenset(v) for k, v in children.items()})

    @classmethod
    def build(cls, fields: Iterable[FieldOfStudy], edges: Iterable[tuple[str, str]]) -> "Taxonomy":
        return cls({f.id: f for f in fields}, frozenset(edges))

    def __contains__(self, node_id: object) -> bool:
        return node_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, node_id: str) -> FieldOfStudy:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownFieldError(node_id) from None

    @property
    def roots(self) -> frozenset[str]:
        return frozenset(n for n in self.nodes if not self._parents.get(n))

    def parents(self, node_id: str) -> frozenset[str]:
        self[node_id]
        return self._parents.get(node_id, frozenset())

    def children(self, node_id: str) -> frozenset[str]:
        self[node_id]
        return self._children.get(node_id, frozenset())

    def ids(self) -> list[str]:
        return sorted(self.nodes)


def ancestors(t: Taxonomy, node_id: str) -> frozenset[str]:
    """All transitive parents of ``node_id``, excluding the node itself."""
    seen: set[str] = set()
    stack = list(t.parents(node_id))
    while stack:
        p = stack.pop()
        if p in seen:
            continue
        seen.add(p)
        stack.extend(t._parents.get(p, ()))
    seen.discard(node_id)
    return frozenset(seen)


def leaves(t: Taxonomy) -> frozenset[str]:
    return frozenset(n for n in t.nodes if not t._children.get(n))


def _find_cycles(t: Taxonomy) -> list[list[str]]:
    # iterative DFS; reports each back edge's cycle once
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in t.nodes}
    cycles: list[list[str]] = []
    for start in sorted(t.nodes):
        if color[start] != WHITE:
            continue
        path: list[str] = []
        stack: list[tuple[str, list[str]]] = [(start, sorted(t._children.get(start, ())))]
        color[start] = GREY
        path.append(start)
        while stack:
            node, pending = stack[-1]
            if not pending:
                stack.pop()
                path.pop()
                color[node] = BLACK
                continue
            nxt = pending.pop(0)
            if nxt not in color:
                continue
            if color[nxt] == GREY:
                cycles.append(path[path.index(nxt):] + [nxt])
            elif color[nxt] == WHITE:
                color[nxt] = GREY
                path.append(nxt)
                stack.append((nxt, sorted(t._children.get(nxt, ()))))
    return cycles


def validate(t: Taxonomy) -> list[str]:
    """Return a list of human-readable invariant violations (empty when valid)."""
    problems: list[str] = []
    for key, node in sorted(t.nodes.items()):
        if not node.id:
            problems.append("node with empty id")
        elif key != node.id:
            problems.append(f"node {node.id} stored under key {key}")
        if any(not kw.strip() for kw in node.keywords):
            problems.append(f"node {node.id}: empty keyword")
        if any(kw != kw.lower() for kw in node.keywords):
            problems.append(f"node {node.id}: keywords must be lowercase")
    for p, c in sorted(t.edges):
        for end in (p, c):
            if end not in t.nodes:
                problems.append(f"edge ({p}, {c}): unknown node {end}")
        if p == c:
            problems.append(f"cycle: {p} -> {p}")
    for cyc in _find_cycles(t):
        if len(cyc) > 2:
            problems.append("cycle: " + " -> ".join(cyc))
    for nid in sorted(leaves(t)):
        if not t.nodes[nid].keywords:
            problems.append(f"leaf without keywords: {nid}")
    # reachability from a root; nodes stuck on a cycle have no root above them
    reached: set[str] = set()
    stack = list(t.roots)
    while stack:
        n = stack.pop()
        if n in reached:
            continue
        reached.add(n)
        stack.extend(t._children.get(n, ()))
    for nid in sorted(set(t.nodes) - reached):
        problems.append(f"node {nid} not reachable from any root")
    return problems


def _split_list(value: str) -> list[str]:
    return [part.strip() for part in value.replace("\n", ",").split(",") if part.strip()]


def _section_lines(text: str) -> dict[str, int]:
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            lines.setdefault(s[1:-1].strip(), lineno)
    return lines


def loads_taxonomy(text: str) -> Taxonomy:
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    parser.optionxform = str  # keep key case so unknown keys are reported verbatim
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise TaxonomyParseError("content before first [node] header", exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise TaxonomyParseError(f"cannot parse {line!r}", lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise TaxonomyParseError(f"duplicate node id {exc.section!r}", exc.lineno) from exc
    except configparser.DuplicateOptionError as exc:
        raise TaxonomyParseError(
            f"duplicate key {exc.option!r} in node {exc.section!r}", exc.lineno
        ) from exc

    where = _section_lines(text)
    fields, edges = [], set()
    for sid in parser.sections():
        sec = parser[sid]
        unknown = set(sec) - {"name", "parents", "keywords", "description"}
        if unknown:
            raise TaxonomyParseError(
                f"node {sid}: unknown key(s) {', '.join(sorted(unknown))}", where.get(sid)
            )
        keywords = tuple(dict.fromkeys(k.lower() for k in _split_list(sec.get("keywords", ""))))
        fields.append(
            FieldOfStudy(
                id=sid,
                display_name=sec.get("name", sid).strip() or sid,
                keywords=keywords,
                description=(sec.get("description") or "").strip() or None,
            )
        )
        for parent in _split_list(sec.get("parents", "")):
            edges.add((parent, sid))
    return Taxonomy.build(fields, edges)


def load_taxonomy(source: BinaryIO | bytes | str) -> Taxonomy:
    """Parse and validate a taxonomy file.

    ``source`` may be a binary stream, raw bytes, or already-decoded text.
    Raises :class:`TaxonomyParseError` for malformed input and
    :class:`TaxonomyValidationError` when invariants fail.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TaxonomyParseError(f"invalid UTF-8 at byte {exc.start}") from exc
    t = loads_taxonomy(source)
    problems = validate(t)
    if problems:
        raise TaxonomyValidationError(problems)
    return t


def load_default_taxonomy() -> Taxonomy:
    data = resources.files("fostrends").joinpath("data", DEFAULT_TAXONOMY).read_bytes()
    return load_taxonomy(data)


def dumps_taxonomy(t: Taxonomy) -> str:
    """Serialize in the file format; output is sorted by node id."""
    out = io.StringIO()
    for nid in t.ids():
        node = t.nodes[nid]
        out.write(f"[{nid}]\n")
        out.write(f"name = {node.display_name}\n")
        out.write(f"parents = {', '.join(sorted(t.parents(nid)))}\n")
        out.write(f"keywords = {', '.join(node.keywords)}\n")
        if node.description:
            out.write(f"description = {node.description}\n")
        out.write("\n")
    return out.getvalue()
