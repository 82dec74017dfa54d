"""Bibliographic records: parsing, normalization, deduplication, filtering, stats.

Canonical on-disk form is JSON Lines, one record per line, keys in the fixed
order ``id, title, abstract, year, venue, language, labels``. ``labels`` is
either a list of field ids (read as gold annotations) or a list of
``{"id": ..., "provenance": ...}`` objects; records are always written in the
object form, sorted by field id.
"""

from __future__ import annotations

import datetime
import enum
import hashlib
import json
import logging
import re
import statistics
import unicodedata
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Iterable, Iterator, Mapping, Sequence

from fostrends.taxonomy import Taxonomy, leaves

log = logging.getLogger(__name__)

RECORD_KEYS = ("id", "title", "abstract", "year", "venue", "language", "labels")
MIN_YEAR = 1900


class Provenance(str, enum.Enum):
    GOLD = "gold"
    IMPORTED = "imported"
    KEYWORD = "keyword-match"
    FUZZY = "fuzzy-match"
    ANCESTOR = "ancestor-propagation"

    @property
    def priority(self) -> int:
        return _PRIORITY[self]


_PRIORITY = {
    Provenance.GOLD: 4,
    Provenance.IMPORTED: 3,
    Provenance.KEYWORD: 2,
    Provenance.FUZZY: 1,
    Provenance.ANCESTOR: 0,
}


class LabelSet(Mapping[str, Provenance]):
    """Field id -> provenance, at most one entry per field.

    When the same field arrives twice the higher-priority provenance wins
    (gold > imported > keyword-match > fuzzy-match > ancestor-propagation).
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[tuple[str, Provenance | str]] | Mapping = ()):
        self._entries: dict[str, Provenance] = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for fid, prov in items:
            prov = Provenance(prov)
            cur = self._entries.get(fid)
            if cur is None or prov.priority > cur.priority:
                self._entries[fid] = prov

    @classmethod
    def of(cls, ids: Iterable[str], provenance: Provenance | str) -> "LabelSet":
        return cls((i, provenance) for i in ids)

    def __getitem__(self, fid: str) -> Provenance:
        return self._entries[fid]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._entries))

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, LabelSet):
            return self._entries == other._entries
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._entries.items()))

    def __or__(self, other: "LabelSet") -> "LabelSet":
        return LabelSet([*self._entries.items(), *other._entries.items()])

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}:{v.value}" for k, v in self.items())
        return f"LabelSet({inner})"

    def ids(self) -> frozenset[str]:
        return frozenset(self._entries)

    def only(self, *provenances: Provenance) -> "LabelSet":
        keep = set(provenances)
        return LabelSet((k, v) for k, v in self._entries.items() if v in keep)

    def to_json(self) -> list[dict]:
        return [{"id": k, "provenance": v.value} for k, v in self.items()]


@dataclass(frozen=True)
class PaperRecord:
    id: str
    title: str
    year: int
    abstract: str = ""
    venue: str | None = None
    language: str | None = None
    labels: LabelSet = field(default_factory=LabelSet)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "abstract": self.abstract,
            "year": self.year,
            "venue": self.venue,
            "language": self.language,
            "labels": self.labels.to_json(),
        }


class CorpusError(Exception):
    pass


@dataclass(frozen=True)
class EntryError:
    index: int
    message: str

    def __str__(self) -> str:
        return f"entry {self.index}: {self.message}"


class RecordParseError(CorpusError):
    """Raised in strict mode; ``records`` holds every entry that did parse."""

    def __init__(self, errors: list[EntryError], records: list[PaperRecord]):
        self.errors = errors
        self.records = records
        super().__init__("; ".join(str(e) for e in errors))


# --------------------------------------------------------------------------- text


_PUNCT_RE = re.compile(r"[^\w\s]|_", re.UNICODE)
_WS_RE = re.compile(r"\s+")


def fold_accents(s: str) -> str:
    decomposed = unicodedata.normalize("NFKD", s)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def normalize_title(s: str) -> str:
    """Lowercase, strip accents and punctuation, collapse whitespace.

    >>> normalize_title("Ünïcode: Test!")
    'unicode test'
    """
    s = fold_accents(s).lower()
    s = _PUNCT_RE.sub(" ", s)
    return _WS_RE.sub(" ", s).strip()


def synthesize_id(title: str, year: int) -> str:
    digest = hashlib.sha1(f"{normalize_title(title)}|{year}".encode("utf-8")).hexdigest()
    return f"rec-{digest[:12]}"


# ------------------------------------------------------------------------ parsing


def _coerce_record(raw: Mapping, max_year: int) -> PaperRecord:
    title = raw.get("title")
    if not isinstance(title, str) or not normalize_title(title):
        raise ValueError("missing or empty title")
    year = raw.get("year")
    try:
        year = int(str(year).strip())
    except (TypeError, ValueError):
        raise ValueError(f"invalid year {year!r}") from None
    if not MIN_YEAR <= year <= max_year:
        raise ValueError(f"year {year} outside [{MIN_YEAR}, {max_year}]")
    abstract = raw.get("abstract") or ""
    if not isinstance(abstract, str):
        raise ValueError("abstract must be a string")
    labels = raw.get("labels") or []
    if not isinstance(labels, list):
        raise ValueError("labels must be a list")
    entries = []
    for item in labels:
        if isinstance(item, str):
            entries.append((item, Provenance.GOLD))
        elif isinstance(item, Mapping) and "id" in item:
            try:
                entries.append((item["id"], Provenance(item.get("provenance", "gold"))))
            except ValueError:
                raise ValueError(f"unknown provenance {item.get('provenance')!r}") from None
        else:
            raise ValueError(f"bad label entry {item!r}")
    rid = raw.get("id")
    rid = str(rid) if rid not in (None, "") else synthesize_id(title, year)
    venue = raw.get("venue") or None
    language = raw.get("language") or None
    return PaperRecord(
        id=rid,
        title=title.strip(),
        abstract=abstract.strip(),
        year=year,
        venue=str(venue) if venue is not None else None,
        language=str(language) if language is not None else None,
        labels=LabelSet(entries),
    )


def _iter_jsonl(text: str) -> Iterator[tuple[int, Mapping | Exception]]:
    index = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            yield index, ValueError(f"invalid JSON ({exc.msg} at column {exc.colno})")
        else:
            yield index, obj if isinstance(obj, dict) else ValueError("not a JSON object")
        index += 1


_LATEX_ACCENTS = {'"': "̈", "'": "́", "`": "̀", "^": "̂", "~": "̃", "c": "̧"}
_ACCENT_RE = re.compile(r"\{?\\([\"'`^~c])\s*\{?([A-Za-z])\}?\}?")
_BIB_ESCAPES = {r"\&": "&", r"\%": "%", r"\_": "_", r"\#": "#", r"\$": "$", "--": "-"}


def _clean_bib_value(value: str) -> str:
    value = _ACCENT_RE.sub(
        lambda m: unicodedata.normalize("NFC", m.group(2) + _LATEX_ACCENTS[m.group(1)]), value
    )
    for src, dst in _BIB_ESCAPES.items():
        value = value.replace(src, dst)
    value = value.replace("{", "").replace("}", "")
    return _WS_RE.sub(" ", value).strip()


class _BibScanner:
    """Just enough BibTeX to read entry keys and field values."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str) -> ValueError:
        line = self.text.count("\n", 0, self.pos) + 1
        return ValueError(f"{msg} (line {line})")

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def braced(self) -> str:
        depth, start = 0, self.pos
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "\\":
                self.pos += 2
                continue
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    self.pos += 1
                    return self.text[start + 1 : self.pos - 1]
            self.pos += 1
        raise self.error("unbalanced braces")

    def quoted(self) -> str:
        start = self.pos
        self.pos += 1
        depth = 0
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
            elif ch == '"' and depth == 0:
                self.pos += 1
                return self.text[start + 1 : self.pos - 1]
            self.pos += 1
        raise self.error("unterminated string")

    def value(self, strings: Mapping[str, str]) -> str:
        parts = []
        while True:
            self.skip_ws()
            ch = self.text[self.pos : self.pos + 1]
            if ch == "{":
                parts.append(self.braced())
            elif ch == '"':
                parts.append(self.quoted())
            else:
                m = re.compile(r"[\w:.+-]+").match(self.text, self.pos)
                if not m:
                    raise self.error("expected field value")
                self.pos = m.end()
                parts.append(strings.get(m.group(0).lower(), m.group(0)))
            self.skip_ws()
            if self.text.startswith("#", self.pos):
                self.pos += 1
                continue
            return "".join(parts)

    def entries(self) -> Iterator[tuple[int, dict | Exception]]:
        strings: dict[str, str] = {}
        index = 0
        entry_re = re.compile(r"@\s*(\w+)\s*([{(])")
        while True:
            m = entry_re.search(self.text, self.pos)
            if not m:
                return
            kind = m.group(1).lower()
            self.pos = m.start(2)
            closer = "}" if m.group(2) == "{" else ")"
            if kind in ("comment", "preamble"):
                try:
                    self.braced() if closer == "}" else self._skip_to(closer)
                except ValueError:
                    return
                continue
            self.pos = m.end()
            try:
                fields = self._body(closer, strings, kind == "string")
            except ValueError as exc:
                yield index, exc
                index += 1
                nxt = self.text.find("\n@", self.pos)
                self.pos = len(self.text) if nxt < 0 else nxt + 1
                continue
            if kind == "string":
                strings.update(fields)
                continue
            yield index, fields
            index += 1

    def _skip_to(self, closer: str):
        end = self.text.find(closer, self.pos)
        self.pos = len(self.text) if end < 0 else end + 1

    def _body(self, closer: str, strings: dict, is_string: bool) -> dict:
        fields: dict[str, str] = {}
        self.skip_ws()
        if not is_string:
            m = re.compile(r"([^,\s]+)\s*,").match(self.text, self.pos)
            if not m:
                raise self.error("missing entry key")
            fields["ID"] = m.group(1)
            self.pos = m.end()
        while True:
            self.skip_ws()
            if self.text.startswith(closer, self.pos):
                self.pos += 1
                return fields
            m = re.compile(r"([\w-]+)\s*=").match(self.text, self.pos)
            if not m:
                raise self.error("expected 'name = value'")
            self.pos = m.end()
            fields[m.group(1).lower()] = self.value(strings)
            self.skip_ws()
            if self.text.startswith(",", self.pos):
                self.pos += 1


def _iter_bibtex(text: str) -> Iterator[tuple[int, Mapping | Exception]]:
    for index, entry in _BibScanner(text).entries():
        if isinstance(entry, Exception):
            yield index, entry
            continue
        raw = {k: _clean_bib_value(v) for k, v in entry.items() if k != "ID"}
        raw["id"] = entry["ID"]
        raw["venue"] = raw.get("booktitle") or raw.get("journal")
        yield index, raw


def parse_records(
    stream: BinaryIO | bytes | str, fmt: str = "jsonl", strict: bool = True
) -> list[PaperRecord]:
    """Parse a record file into :class:`PaperRecord` objects, input order kept.

    ``fmt`` is ``"jsonl"`` or ``"bibtex"``. Bad entries never stop the scan:
    with ``strict`` a :class:`RecordParseError` carrying both the errors and
    the good records is raised at the end, otherwise bad entries are logged
    and skipped.
    """
    if hasattr(stream, "read"):
        stream = stream.read()
    if isinstance(stream, bytes):
        try:
            stream = stream.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusError(f"invalid UTF-8 at byte {exc.start}") from exc
    if stream.startswith("﻿"):
        stream = stream[1:]
    if fmt == "jsonl":
        entries = _iter_jsonl(stream)
    elif fmt == "bibtex":
        entries = _iter_bibtex(stream)
    else:
        raise ValueError(f"unknown record format {fmt!r}")

    max_year = datetime.date.today().year + 1
    records: list[PaperRecord] = []
    errors: list[EntryError] = []
    for index, raw in entries:
        if isinstance(raw, Exception):
            errors.append(EntryError(index, str(raw)))
            continue
        try:
            records.append(_coerce_record(raw, max_year))
        except ValueError as exc:
            errors.append(EntryError(index, str(exc)))
    if errors:
        if strict:
            raise RecordParseError(errors, records)
        for err in errors:
            log.warning("skipping %s", err)
    return records


def dumps_records(records: Iterable[PaperRecord]) -> str:
    return "".join(json.dumps(r.to_json(), ensure_ascii=False) + "\n" for r in records)


# ------------------------------------------------------------------ dedup / filter


def _sort_key(r: PaperRecord):
    return (r.year, normalize_title(r.title), r.id, r.title, r.abstract, r.venue or "", r.language or "")


def deduplicate(records: Iterable[PaperRecord]) -> list[PaperRecord]:
    """Merge records whose normalized titles are equal.

    Within a group, the earliest record (by year, then id) supplies id, title,
    venue and language; the first non-empty abstract is kept and labels are
    unioned. Output is sorted by ``(year, normalized title)``.
    """
    groups: dict[str, list[PaperRecord]] = {}
    for r in sorted(records, key=_sort_key):
        groups.setdefault(normalize_title(r.title), []).append(r)
    merged = []
    for group in groups.values():
        head = group[0]
        labels = head.labels
        for other in group[1:]:
            labels = labels | other.labels
        merged.append(
            replace(
                head,
                abstract=next((g.abstract for g in group if g.abstract), ""),
                venue=next((g.venue for g in group if g.venue), None),
                language=next((g.language for g in group if g.language), None),
                labels=labels,
            )
        )
    merged.sort(key=lambda r: (r.year, normalize_title(r.title), r.id))
    return merged


DEFAULT_NON_RESEARCH_PATTERNS = (
    r"^preface\b",
    r"^foreword\b",
    r"^front ?matter\b",
    r"^table of contents\b",
    r"^contents$",
    r"^(author|subject|keyword) index\b",
    r"^index of authors\b",
    r"^proceedings of\b",
    r"^(program|organizing|steering) committee\b",
    r"^conference program\b",
    r"^message from the\b",
)

ENGLISH_TAGS = frozenset({"en", "eng", "english"})


def is_english(tag: str | None) -> bool:
    if tag is None or not tag.strip():
        return True
    tag = tag.strip().lower().replace("_", "-")
    return tag in ENGLISH_TAGS or tag.split("-")[0] in ENGLISH_TAGS


def filter_research(
    records: Iterable[PaperRecord],
    taxonomy: Taxonomy,
    patterns: Sequence[str] = DEFAULT_NON_RESEARCH_PATTERNS,
) -> list[PaperRecord]:
    """Drop front matter, non-English records, and catch-all label sets.

    A label set counts as catch-all when it covers every leaf of the taxonomy.
    Patterns are regular expressions searched in the normalized title.
    """
    compiled = [re.compile(p) for p in patterns]
    all_leaves = leaves(taxonomy)
    kept = []
    for r in records:
        title = normalize_title(r.title)
        if any(p.search(title) for p in compiled):
            log.debug("dropping non-research record %s: %r", r.id, r.title)
            continue
        if not is_english(r.language):
            log.debug("dropping non-English record %s (%s)", r.id, r.language)
            continue
        if all_leaves and all_leaves <= r.labels.ids():
            log.debug("dropping record %s labeled with every leaf", r.id)
            continue
        kept.append(r)
    return kept


# -------------------------------------------------------------------------- stats


@dataclass(frozen=True)
class CorpusStats:
    n_records: int
    mean_labels_per_record: float | None
    per_class_counts: dict[str, int]
    min_class: int | None
    max_class: int | None
    mean_class: float | None

    def to_json(self) -> dict:
        return {
            "n_records": self.n_records,
            "mean_labels_per_record": self.mean_labels_per_record,
            "per_class_counts": dict(sorted(self.per_class_counts.items())),
            "min_class": self.min_class,
            "max_class": self.max_class,
            "mean_class": self.mean_class,
        }

    def summary(self) -> str:
        def fmt(v):
            return "n/a" if v is None else f"{v:.2f}"

        return (
            f"records: {self.n_records}\n"
            f"mean labels per record: {fmt(self.mean_labels_per_record)}\n"
            f"classes: {len(self.per_class_counts)} "
            f"(min {self.min_class}, max {self.max_class}, mean {fmt(self.mean_class)})\n"
        )


def corpus_stats(records: Sequence[PaperRecord]) -> CorpusStats:
    counts: dict[str, int] = {}
    for r in records:
        for fid in r.labels:
            counts[fid] = counts.get(fid, 0) + 1
    n = len(records)
    return CorpusStats(
        n_records=n,
        mean_labels_per_record=sum(len(r.labels) for r in records) / n if n else None,
        per_class_counts=dict(sorted(counts.items())),
        min_class=min(counts.values()) if counts else None,
        max_class=max(counts.values()) if counts else None,
        mean_class=statistics.fmean(counts.values()) if counts else None,
    )
