"""Keyword and fuzzy-match weak labeling of records against the taxonomy."""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import BinaryIO, Iterable, Sequence

from fostrends.corpus import LabelSet, PaperRecord, Provenance, fold_accents
from fostrends.taxonomy import Taxonomy, UnknownFieldError, ancestors

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

MATCH_REPORT_COLUMNS = (
    "record_id", "field_id", "keyword", "surface", "title_count", "abstract_count", "distance",
)


@dataclass(frozen=True)
class MatcherConfig:
    """Weak-labeling knobs.

    ``fuzzy_min_token_length``: keyword tokens shorter than this must match
    exactly, otherwise abbreviations like "qa" or "ner" would match any
    two- or three-letter word.
    ``threshold_scope``: ``"field"`` sums counts over all keywords of a field,
    ``"keyword"`` requires a single keyword to reach the threshold.
    """

    occurrence_threshold: int = 2
    fuzzy_max_distance: int = 1
    token_boundary: bool = True
    fuzzy_min_token_length: int = 4
    threshold_scope: str = "field"
    title_weight: float = 1.0
    abstract_weight: float = 1.0

    def __post_init__(self):
        if self.occurrence_threshold < 1:
            raise ValueError("occurrence_threshold must be >= 1")
        if self.fuzzy_max_distance < 0:
            raise ValueError("fuzzy_max_distance must be >= 0")
        if self.threshold_scope not in ("field", "keyword"):
            raise ValueError(f"threshold_scope must be 'field' or 'keyword', not {self.threshold_scope!r}")
        if self.title_weight < 0 or self.abstract_weight < 0:
            raise ValueError("weights must be non-negative")


@dataclass(frozen=True)
class MatchReport:
    field_id: str
    keyword: str
    surface: str
    title_count: int
    abstract_count: int
    distance: int


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(fold_accents(text).lower())


def levenshtein(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        row = [i]
        for j, cb in enumerate(b, 1):
            row.append(min(row[-1] + 1, prev[j] + 1, prev[j - 1] + (ca != cb)))
        prev = row
    return prev[-1]


@lru_cache(maxsize=1 << 16)
def bounded_distance(a: str, b: str, limit: int) -> int:
    """Levenshtein distance if it is <= ``limit``, else ``limit + 1``."""
    if a == b:
        return 0
    if limit == 0 or abs(len(a) - len(b)) > limit:
        return limit + 1
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        row = [i]
        for j, cb in enumerate(b, 1):
            row.append(min(row[-1] + 1, prev[j] + 1, prev[j - 1] + (ca != cb)))
        if min(row) > limit:
            return limit + 1
        prev = row
    return min(prev[-1], limit + 1)


def _token_distance(kw_tok: str, tok: str, cfg: MatcherConfig) -> int:
    limit = cfg.fuzzy_max_distance if len(kw_tok) >= cfg.fuzzy_min_token_length else 0
    d = bounded_distance(kw_tok, tok, limit)
    return d if d <= limit else -1


def _occurrences(
    tokens: Sequence[str],
    kw_tokens: Sequence[str],
    cfg: MatcherConfig,
    claimed: set[int] | None = None,
) -> list[tuple[range, str, int]]:
    """Leftmost non-overlapping matches as ``(span, surface, distance)``.

    With ``token_boundary`` the span indexes tokens and each keyword token is
    matched fuzzily against one text token. Without it, the span indexes
    characters of the space-joined token string and matching is exact.
    """
    claimed = claimed if claimed is not None else set()
    found = []
    if not cfg.token_boundary:
        hay, needle = " ".join(tokens), " ".join(kw_tokens)
        start = hay.find(needle)
        while needle and start >= 0:
            span = range(start, start + len(needle))
            if claimed.isdisjoint(span):
                found.append((span, needle, 0))
                start = hay.find(needle, span.stop)
            else:
                start = hay.find(needle, start + 1)
        return found

    n, L = len(tokens), len(kw_tokens)
    i = 0
    while L and i + L <= n:
        span = range(i, i + L)
        worst = 0
        if claimed.isdisjoint(span):
            for kt, tt in zip(kw_tokens, tokens[i : i + L]):
                d = _token_distance(kt, tt, cfg)
                if d < 0:
                    worst = -1
                    break
                worst = max(worst, d)
        else:
            worst = -1
        if worst >= 0:
            found.append((span, " ".join(tokens[i : i + L]), worst))
            i += L
        else:
            i += 1
    return found


def fuzzy_match_count(text: str, keyword: str, cfg: MatcherConfig | None = None) -> tuple[int, list[str]]:
    """Count non-overlapping fuzzy occurrences of ``keyword`` in ``text``.

    Returns the count and the surface form of each occurrence, in text order.
    """
    cfg = cfg or MatcherConfig()
    kw_tokens = tokenize(keyword)
    if not kw_tokens:
        raise ValueError("keyword must contain at least one word character")
    occ = _occurrences(tokenize(text), kw_tokens, cfg)
    return len(occ), [surface for _, surface, _ in occ]


def _field_matches(
    title_tokens: list[str], abstract_tokens: list[str], keywords: Iterable[str], cfg: MatcherConfig
) -> list[MatchReport]:
    # longer keywords claim their spans first so nested keywords of the same
    # field ("language model" in "large language model") are not double counted
    kws = sorted({kw: tokenize(kw) for kw in keywords}.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    counts: dict[tuple[str, str, int], list[int]] = {}
    for slot, tokens in ((0, title_tokens), (1, abstract_tokens)):
        claimed: set[int] = set()
        for kw, kw_tokens in kws:
            if not kw_tokens:
                continue
            for span, surface, dist in _occurrences(tokens, kw_tokens, cfg, claimed):
                claimed.update(span)
                counts.setdefault((kw, surface, dist), [0, 0])[slot] += 1
    return [
        MatchReport("", kw, surface, tc, ac, dist)
        for (kw, surface, dist), (tc, ac) in sorted(counts.items())
    ]


def _weighted(reports: Iterable[MatchReport], cfg: MatcherConfig) -> float:
    return sum(cfg.title_weight * r.title_count + cfg.abstract_weight * r.abstract_count for r in reports)


def keyword_label(
    record: PaperRecord, taxonomy: Taxonomy, cfg: MatcherConfig | None = None
) -> tuple[LabelSet, list[MatchReport]]:
    """Assign every field whose keyword mentions reach the occurrence threshold.

    Title and abstract mentions are summed (weighted by the config). Returned
    reports cover only the matches that contributed to an assigned field.
    """
    cfg = cfg or MatcherConfig()
    title_tokens, abstract_tokens = tokenize(record.title), tokenize(record.abstract)
    entries: list[tuple[str, Provenance]] = []
    reports: list[MatchReport] = []
    for fid in taxonomy.ids():
        matches = _field_matches(title_tokens, abstract_tokens, taxonomy.nodes[fid].keywords, cfg)
        if not matches:
            continue
        if cfg.threshold_scope == "field":
            contributing = matches if _weighted(matches, cfg) >= cfg.occurrence_threshold else []
        else:
            by_kw: dict[str, list[MatchReport]] = {}
            for m in matches:
                by_kw.setdefault(m.keyword, []).append(m)
            contributing = [
                m for group in by_kw.values()
                if _weighted(group, cfg) >= cfg.occurrence_threshold
                for m in group
            ]
        if not contributing:
            continue
        exact = all(m.distance == 0 for m in contributing)
        entries.append((fid, Provenance.KEYWORD if exact else Provenance.FUZZY))
        reports.extend(replace(m, field_id=fid) for m in contributing)
    return LabelSet(entries), reports


def propagate_ancestors(labels: LabelSet, taxonomy: Taxonomy) -> LabelSet:
    extra = []
    for fid in labels:
        if fid not in taxonomy:
            raise UnknownFieldError(fid)
        extra.extend((a, Provenance.ANCESTOR) for a in ancestors(taxonomy, fid))
    return labels | LabelSet(extra)


def label_corpus(
    records: Iterable[PaperRecord],
    taxonomy: Taxonomy,
    cfg: MatcherConfig | None = None,
    propagate: bool = False,
    reports: list[tuple[str, MatchReport]] | None = None,
) -> list[PaperRecord]:
    """Relabel records: keep gold/imported labels, recompute heuristic ones.

    When ``reports`` is given, ``(record_id, MatchReport)`` pairs are appended.
    """
    cfg = cfg or MatcherConfig()
    out = []
    for r in records:
        heuristic, matches = keyword_label(r, taxonomy, cfg)
        labels = r.labels.only(Provenance.GOLD, Provenance.IMPORTED) | heuristic
        if propagate:
            labels = propagate_ancestors(labels, taxonomy)
        if reports is not None:
            reports.extend((r.id, m) for m in matches)
        out.append(replace(r, labels=labels))
    return out


class PredictionsError(ValueError):
    pass


def load_label_map(stream: BinaryIO | bytes | str) -> dict[str, frozenset[str]]:
    """Read ``{"id": ..., "labels": [...]}`` lines into ``id -> field ids``.

    Repeating an id with the same labels is allowed; conflicting repeats raise
    :class:`PredictionsError` naming every offending id.
    """
    if hasattr(stream, "read"):
        stream = stream.read()
    if isinstance(stream, bytes):
        stream = stream.decode("utf-8")
    out: dict[str, frozenset[str]] = {}
    conflicts: set[str] = set()
    for lineno, line in enumerate(stream.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PredictionsError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "id" not in obj or not isinstance(obj.get("labels", []), list):
            raise PredictionsError(f"line {lineno}: expected {{'id': ..., 'labels': [...]}}")
        rid = str(obj["id"])
        labels = frozenset(str(x) for x in obj.get("labels", []))
        if rid in out and out[rid] != labels:
            conflicts.add(rid)
        out.setdefault(rid, labels)
    if conflicts:
        raise PredictionsError("conflicting predictions for ids: " + ", ".join(sorted(conflicts)))
    return out


def dumps_label_map(labels: dict[str, Iterable[str]]) -> str:
    return "".join(
        json.dumps({"id": rid, "labels": sorted(labels[rid])}, ensure_ascii=False) + "\n"
        for rid in sorted(labels)
    )


def import_predictions(
    records: Iterable[PaperRecord], stream: BinaryIO | bytes | str
) -> tuple[list[PaperRecord], list[str]]:
    """Add externally predicted labels with provenance ``imported``.

    Returns the updated records and the sorted ids that matched no record.
    """
    preds = load_label_map(stream)
    out, seen = [], set()
    for r in records:
        if r.id in preds:
            seen.add(r.id)
            r = replace(r, labels=r.labels | LabelSet.of(preds[r.id], Provenance.IMPORTED))
        out.append(r)
    return out, sorted(set(preds) - seen)


def dumps_match_reports(reports: Iterable[tuple[str, MatchReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MATCH_REPORT_COLUMNS)
    for rid, m in reports:
        w.writerow([rid, m.field_id, m.keyword, m.surface, m.title_count, m.abstract_count, m.distance])
    return buf.getvalue()
