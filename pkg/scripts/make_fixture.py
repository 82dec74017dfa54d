"""Generate the 200-record synthetic fixture corpus used by the test suite.

Run once; the output is committed. Deterministic for a given seed:

    python scripts/make_fixture.py > tests/data/fixture_corpus.jsonl
"""

import configparser
import json
import random
import sys
from pathlib import Path

SEED = 20230
N_RECORDS = 200
ROOT = Path(__file__).resolve().parents[1]

# topic -> (surface phrases, popularity by era: weights for 1995-2009, 2010-2017, 2018-2022)
TOPICS = {
    "machine_translation": (["machine translation", "neural machine translation", "machine translaton"], (6, 6, 5)),
    "language_models": (["language models", "language model", "large language model", "languge models"], (1, 3, 12)),
    "representation_learning": (["representation learning", "word embeddings", "sentence embeddings"], (1, 5, 4)),
    "text_classification": (["text classification", "document classification"], (3, 4, 4)),
    "syntactic_parsing": (["dependency parsing", "syntactic parsing", "constituency parsing"], (6, 3, 1)),
    "summarization": (["summarization", "summarisation", "abstractive summarization"], (1, 2, 4)),
    "question_answering": (["question answering", "open-domain question answering"], (1, 3, 5)),
    "dialogue_systems_conversational_agents": (["dialogue systems", "dialog systems", "conversational agents"], (2, 2, 5)),
    "low_resource_nlp": (["low-resource", "low resource", "few-shot"], (0, 1, 6)),
    "tagging": (["part-of-speech tagging", "sequence labeling", "pos tagging"], (5, 3, 1)),
    "named_entity_recognition": (["named entity recognition", "named entities"], (2, 3, 2)),
    "ethical_nlp": (["gender bias", "social bias", "hate speech"], (0, 1, 4)),
    "morphology": (["morphological analysis", "morphology"], (3, 2, 1)),
}

FILLER = [
    "We propose a new approach and evaluate it on standard benchmarks.",
    "Experiments show consistent improvements over strong baselines.",
    "Our analysis reveals several open problems.",
    "We release our code and data to the community.",
    "The method is simple and requires little tuning.",
    "Results hold across several datasets and settings.",
]

TITLE_TEMPLATES = [
    "{a} with {b}",
    "Improving {a} via {b}",
    "On the Role of {b} in {a}",
    "{a}: A Survey",
    "Revisiting {a}",
    "{a} for {b}",
    "Towards Better {a}",
]

ERAS = [(range(1995, 2010), 0), (range(2010, 2018), 1), (range(2018, 2023), 2)]


def title_case(s):
    return " ".join(w if w.isupper() else w[:1].upper() + w[1:] for w in s.split())


def pick_year(rng):
    era_years, _ = rng.choices(ERAS, weights=[2, 4, 9])[0]
    return rng.choice(list(era_years))


def pick_topic(rng, year):
    era = next(e for ys, e in ERAS if year in ys)
    names = sorted(TOPICS)
    weights = [TOPICS[n][1][era] for n in names]
    return rng.choices(names, weights=weights)[0]


def make_record(rng, i):
    year = pick_year(rng)
    main = pick_topic(rng, year)
    other = pick_topic(rng, year)
    main_phr, other_phr = TOPICS[main][0], TOPICS[other][0]
    a = rng.choice(main_phr)
    b = rng.choice(other_phr)
    title = title_case(rng.choice(TITLE_TEMPLATES).format(a=a, b=b))
    sentences = rng.sample(FILLER, 2)
    mentions = rng.choice([0, 1, 1, 2, 2])
    for _ in range(mentions):
        sentences.insert(rng.randrange(len(sentences) + 1), f"We focus on {rng.choice(main_phr)} in this work.")
    if rng.random() < 0.3:
        sentences.append(f"We also discuss {rng.choice(other_phr)}.")
    abstract = " ".join(sentences) if rng.random() > 0.05 else ""
    rec = {
        "id": f"P{i:04d}",
        "title": title,
        "abstract": abstract,
        "year": year,
        "venue": rng.choice(["ACL", "EMNLP", "NAACL", "COLING", "TACL", None]),
        "language": rng.choice(["en", "en", "en", None]),
        "labels": [],
    }
    if rng.random() < 0.08:
        rec["labels"] = [main]
    if rng.random() < 0.05:
        del rec["id"]
    return rec


def main():
    rng = random.Random(SEED)
    tax = configparser.ConfigParser(interpolation=None)
    tax.read(ROOT / "src/fostrends/data/default_taxonomy.ini", encoding="utf-8")
    parents = {s: [p.strip() for p in tax[s].get("parents", "").split(",") if p.strip()] for s in tax.sections()}
    leaves = sorted(s for s in parents if not any(s in ps for ps in parents.values()))

    records = [make_record(rng, i) for i in range(N_RECORDS - 20)]
    # near-duplicates: same title modulo case/punctuation, shifted year
    for k, src in enumerate(rng.sample(records, 12)):
        dup = dict(src)
        dup["id"] = f"D{k:04d}"
        dup["title"] = src["title"].upper() if k % 2 else src["title"].replace(" ", "  ") + "."
        dup["year"] = max(1995, src["year"] + rng.choice([-1, 0, 1]))
        dup["abstract"] = "" if k % 3 == 0 else src["abstract"]
        dup["labels"] = [rng.choice(sorted(TOPICS))] if k % 4 == 0 else []
        records.append(dup)
    records += [
        {"id": "F0001", "title": "Preface", "abstract": "", "year": 2019, "venue": "ACL", "language": "en", "labels": []},
        {"id": "F0002", "title": "Proceedings of the Workshop on Machine Translation", "abstract": "",
         "year": 2021, "venue": "WMT", "language": "en", "labels": []},
        {"id": "F0003", "title": "Front Matter", "abstract": "", "year": 2020, "venue": "LREC", "language": None, "labels": []},
        {"id": "L0001", "title": "Maschinelle Übersetzung für Sprachmodelle", "abstract": "Wir untersuchen maschinelle Übersetzung.",
         "year": 2020, "venue": "KONVENS", "language": "de", "labels": []},
        {"id": "L0002", "title": "Résumé automatique de textes", "abstract": "Nous étudions le résumé automatique.",
         "year": 2021, "venue": "TALN", "language": "fr", "labels": []},
        {"id": "U0001", "title": "A Catch-All Record Labeled With Everything", "abstract": "",
         "year": 2021, "venue": "arXiv", "language": "en", "labels": leaves},
    ]
    # pad with extra topical records to reach exactly N_RECORDS
    i = len(records)
    while len(records) < N_RECORDS:
        records.append(make_record(rng, 1000 + i))
        i += 1
    rng.shuffle(records)
    out = sys.stdout
    for rec in records:
        out.write(json.dumps(rec, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
