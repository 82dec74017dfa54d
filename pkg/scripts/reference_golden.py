"""One-off reference computation of the fixture golden files.

Deliberately does not import ``fostrends``: everything (title normalization,
deduplication, keyword matching, counting) is re-derived here in the most
direct way, so the committed goldens act as an independent check.

    python scripts/reference_golden.py
"""

import configparser
import csv
import hashlib
import json
import unicodedata
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "tests" / "data"
PRIORITY = ["ancestor-propagation", "fuzzy-match", "keyword-match", "imported", "gold"]


def fold(s):
    return "".join(c for c in unicodedata.normalize("NFKD", s) if not unicodedata.combining(c))


def words(s):
    out, cur = [], ""
    for ch in fold(s).lower():
        if ch.isalnum():
            cur += ch
        else:
            if cur:
                out.append(cur)
            cur = ""
    if cur:
        out.append(cur)
    return out


def norm_title(s):
    return " ".join(words(s))


def lev(a, b):
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[-1][-1]


def merge(labels, fid, prov):
    if fid not in labels or PRIORITY.index(prov) > PRIORITY.index(labels[fid]):
        labels[fid] = prov


def load_taxonomy():
    cp = configparser.ConfigParser(interpolation=None)
    cp.read(ROOT / "src/fostrends/data/default_taxonomy.ini", encoding="utf-8")
    kws, parents = {}, {}
    for s in cp.sections():
        kws[s] = list(dict.fromkeys(k.strip().lower() for k in cp[s].get("keywords", "").split(",") if k.strip()))
        parents[s] = [p.strip() for p in cp[s].get("parents", "").split(",") if p.strip()]
    return kws, parents


def read_corpus():
    recs = []
    for line in (DATA / "fixture_corpus.jsonl").read_text(encoding="utf-8").splitlines():
        r = json.loads(line)
        labels = {}
        for lab in r.get("labels") or []:
            merge(labels, lab, "gold")
        rid = r.get("id") or "rec-" + hashlib.sha1(f"{norm_title(r['title'])}|{r['year']}".encode()).hexdigest()[:12]
        recs.append({"id": rid, "title": r["title"].strip(), "abstract": (r.get("abstract") or "").strip(),
                     "year": int(r["year"]), "venue": r.get("venue"), "language": r.get("language"),
                     "labels": labels})
    return recs


def dedup(recs):
    groups = {}
    for r in recs:
        groups.setdefault(norm_title(r["title"]), []).append(r)
    out = []
    for key, g in groups.items():
        g = sorted(g, key=lambda r: (r["year"], r["id"], r["title"], r["abstract"], r["venue"] or "", r["language"] or ""))
        labels = {}
        for r in g:
            for fid, prov in r["labels"].items():
                merge(labels, fid, prov)
        head = dict(g[0])
        head["abstract"] = next((r["abstract"] for r in g if r["abstract"]), "")
        head["labels"] = labels
        out.append((head["year"], key, head["id"], head))
    return [h for *_, h in sorted(out, key=lambda t: t[:3])]


def count_field(tokens, keywords):
    """Greedy longest-keyword-first, left-to-right, non-overlapping matches."""
    taken = [False] * len(tokens)
    hits = []
    for kw in sorted(keywords, key=lambda k: (-len(words(k)), k)):
        kt = words(kw)
        i = 0
        while i + len(kt) <= len(tokens):
            ds = []
            for a, b in zip(kt, tokens[i:i + len(kt)]):
                limit = 1 if len(a) >= 4 else 0
                ds.append(lev(a, b) if lev(a, b) <= limit else None)
            if None not in ds and not any(taken[i:i + len(kt)]):
                for j in range(i, i + len(kt)):
                    taken[j] = True
                hits.append(max(ds))
                i += len(kt)
            else:
                i += 1
    return hits


def label(rec, kws):
    labels = {f: p for f, p in rec["labels"].items() if p in ("gold", "imported")}
    tt, at = words(rec["title"]), words(rec["abstract"])
    for fid in sorted(kws):
        hits = count_field(tt, kws[fid]) + count_field(at, kws[fid])
        if len(hits) >= 2:
            merge(labels, fid, "keyword-match" if max(hits) == 0 else "fuzzy-match")
    return labels


def all_ancestors(fid, parents):
    out, todo = set(), list(parents[fid])
    while todo:
        p = todo.pop()
        if p not in out:
            out.add(p)
            todo.extend(parents[p])
    return out


def stats(recs):
    per = {}
    for r in recs:
        for f in r["labels"]:
            per[f] = per.get(f, 0) + 1
    n = len(recs)
    return {
        "n_records": n,
        "mean_labels_per_record": sum(len(r["labels"]) for r in recs) / n if n else None,
        "per_class_counts": dict(sorted(per.items())),
        "min_class": min(per.values()) if per else None,
        "max_class": max(per.values()) if per else None,
        "mean_class": sum(per.values()) / len(per) if per else None,
    }


def main():
    kws, parents = load_taxonomy()
    raw = read_corpus()
    merged = dedup(raw)
    (DATA / "golden_ingest_stats.json").write_text(
        json.dumps({"pre_dedup_count": len(raw), "post_dedup_count": len(merged), "stats": stats(merged)},
                   indent=2, sort_keys=True) + "\n", encoding="utf-8")

    labeled = {r["id"]: label(r, kws) for r in merged}
    (DATA / "golden_labels.json").write_text(
        json.dumps({rid: dict(sorted(l.items())) for rid, l in sorted(labeled.items())}, indent=2) + "\n",
        encoding="utf-8")

    counts = {f: {y: 0 for y in range(1952, 2023)} for f in parents}
    for r in merged:
        if not 1952 <= r["year"] <= 2022:
            continue
        fields = set(labeled[r["id"]])
        for f in list(fields):
            fields |= all_ancestors(f, parents)
        for f in fields:
            counts[f][r["year"]] += 1
    with open(DATA / "golden_series.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["field_id", "year", "count"])
        for f in sorted(counts):
            for y in sorted(counts[f]):
                w.writerow([f, y, counts[f][y]])


if __name__ == "__main__":
    main()
