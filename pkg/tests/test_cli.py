import csv
import json
import re
import subprocess
import sys

import pytest

from conftest import FIXTURE_CORPUS
from fostrends import cli


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def error_of(err):
    return json.loads(err.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def labeled(tmp_path_factory):
    """Ingest and label the fixture corpus once; return the output directory."""
    d = tmp_path_factory.mktemp("pipe")
    assert cli.main(["ingest", "--corpus", str(FIXTURE_CORPUS), "--out", str(d / "ingest")]) == 0
    assert cli.main(["label", "--corpus", str(d / "ingest" / "corpus.jsonl"), "--out", str(d / "label")]) == 0
    return d


def test_ingest_outputs(labeled):
    stats = json.loads((labeled / "ingest" / "ingest_stats.json").read_text())
    assert stats["pre_dedup_count"] == 200
    assert stats["post_dedup_count"] < 200
    manifest = json.loads((labeled / "ingest" / "ingest_manifest.json").read_text())
    assert manifest["inputs"]["corpus"]["file"] == "fixture_corpus.jsonl"
    assert len(manifest["inputs"]["corpus"]["sha256"]) == 64
    assert str(labeled) not in json.dumps(manifest)


def test_label_filters_front_matter(labeled):
    ids = {json.loads(l)["id"] for l in (labeled / "label" / "labeled.jsonl").read_text().splitlines()}
    assert not ids & {"F0001", "F0002", "F0003", "L0001", "L0002", "U0001"}
    stats = json.loads((labeled / "label" / "label_stats.json").read_text())
    assert stats["filtered_out"] == 6
    rows = list(csv.DictReader((labeled / "label" / "matches.csv").open()))
    assert rows and {r["record_id"] for r in rows} <= ids


def test_trends_outputs(labeled, tmp_path, capsys):
    code, out, _ = run(capsys, "trends", "--corpus", labeled / "label" / "labeled.jsonl", "--out", tmp_path)
    assert code == 0 and "growth-share matrix over" in out
    names = {p.name for p in tmp_path.iterdir()}
    assert {"series.csv", "matrix.csv", "lifecycle.csv", "growth_share.svg", "lifecycle.svg",
            "trends_manifest.json"} <= names
    manifest = json.loads((tmp_path / "trends_manifest.json").read_text())
    res = manifest["results"]
    assert res["window_years"] == [2018, 2022]
    assert res["split_rule"] == "median" and res["propagate"] is True
    assert -5 <= res["growth_lambda"] <= 5 and -5 <= res["total_lambda"] <= 5

    # quadrant attributes in the SVG agree with matrix.csv
    rows = {r["field_id"]: r["quadrant"] for r in csv.DictReader((tmp_path / "matrix.csv").open())}
    svg = (tmp_path / "growth_share.svg").read_text()
    assert dict(re.findall(r'data-field="([^"]+)" data-quadrant="([^"]+)"', svg)) == rows


def test_missing_input(tmp_path, capsys):
    code, _, err = run(capsys, "ingest", "--corpus", tmp_path / "nope.jsonl", "--out", tmp_path)
    assert code == 1
    assert error_of(err)["error"].startswith("input file not found")
    assert not list(tmp_path.iterdir())


def test_malformed_records_listed(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"title": "ok", "year": 2020}\n{oops\n{"title": "t"}\n')
    code, _, err = run(capsys, "ingest", "--corpus", bad, "--out", tmp_path / "o")
    assert code == 1
    e = error_of(err)
    assert e["error"] == "2 malformed entries in bad.jsonl"
    assert [d.split(":")[0] for d in e["details"]] == ["entry 1", "entry 2"]
    code, _, _ = run(capsys, "ingest", "--corpus", bad, "--skip-invalid", "--out", tmp_path / "o")
    assert code == 0


def test_invalid_taxonomy(labeled, tmp_path, capsys):
    tax = tmp_path / "tax.ini"
    tax.write_text("[a]\nkeywords = x\nparents = b\n\n[b]\nkeywords = y\nparents = a\n")
    code, _, err = run(capsys, "label", "--corpus", labeled / "ingest" / "corpus.jsonl",
                       "--taxonomy", tax, "--out", tmp_path / "o")
    assert code == 1
    e = error_of(err)
    assert e["error"] == "taxonomy validation failed"
    assert any(d.startswith("cycle") for d in e["details"])


def test_high_threshold_only_gold(labeled, tmp_path, capsys):
    code, _, _ = run(capsys, "label", "--corpus", labeled / "ingest" / "corpus.jsonl",
                     "--threshold", 100, "--out", tmp_path)
    assert code == 0
    for line in (tmp_path / "labeled.jsonl").read_text().splitlines():
        assert {l["provenance"] for l in json.loads(line)["labels"]} <= {"gold"}
    assert (tmp_path / "matches.csv").read_text().count("\n") == 1


def test_predictions_import(labeled, tmp_path, capsys):
    corpus = (labeled / "ingest" / "corpus.jsonl").read_text().splitlines()
    rid = next(r["id"] for r in map(json.loads, corpus) if r["id"].startswith("P") and not r["labels"])
    preds = tmp_path / "preds.jsonl"
    preds.write_text(json.dumps({"id": rid, "labels": ["tagging"]}) + '\n{"id": "GHOST", "labels": ["tagging"]}\n')
    code, _, _ = run(capsys, "label", "--corpus", labeled / "ingest" / "corpus.jsonl",
                     "--predictions", preds, "--out", tmp_path / "o")
    assert code == 0
    recs = {json.loads(l)["id"]: json.loads(l) for l in (tmp_path / "o" / "labeled.jsonl").read_text().splitlines()}
    assert {"id": "tagging", "provenance": "imported"} in recs[rid]["labels"]
    stats = json.loads((tmp_path / "o" / "label_stats.json").read_text())
    assert stats["unmatched_prediction_ids"] == ["GHOST"]

    preds.write_text(json.dumps({"id": rid, "labels": ["not_a_field"]}) + "\n")
    code, _, err = run(capsys, "label", "--corpus", labeled / "ingest" / "corpus.jsonl",
                       "--predictions", preds, "--out", tmp_path / "o2")
    assert code == 1 and error_of(err)["details"] == ["not_a_field"]


def test_eval(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    gold.write_text('{"id": "r1", "labels": ["a", "b"]}\n{"id": "r2", "labels": ["c"]}\n')
    pred.write_text('{"id": "r1", "labels": ["a"]}\n{"id": "r2", "labels": ["c", "d"]}\n')
    code, out, _ = run(capsys, "eval", "--gold", gold, "--pred", pred, "--out", tmp_path / "o")
    assert code == 0 and "micro" in out
    m = json.loads((tmp_path / "o" / "metrics.json").read_text())["micro"]
    assert (m["tp"], m["fp"], m["fn"]) == (2, 1, 1)

    pred.write_text('{"id": "r1", "labels": ["a"]}\n{"id": "r3", "labels": []}\n')
    code, _, err = run(capsys, "eval", "--gold", gold, "--pred", pred, "--out", tmp_path / "o")
    assert code == 1
    assert error_of(err)["details"] == ["gold only: r2", "pred only: r3"]


def test_eval_propagate(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    gold.write_text('{"id": "r1", "labels": ["machine_translation"]}\n')
    pred.write_text('{"id": "r1", "labels": ["summarization"]}\n')
    code, _, _ = run(capsys, "eval", "--gold", gold, "--pred", pred, "--propagate", "--out", tmp_path / "o")
    assert code == 0
    m = json.loads((tmp_path / "o" / "metrics.json").read_text())["micro"]
    assert m["tp"] >= 1  # shared ancestors now match


def test_single_field_lifecycle_undefined(labeled, tmp_path, capsys):
    code, _, err = run(capsys, "trends", "--corpus", labeled / "label" / "labeled.jsonl",
                       "--fields", "machine_translation", "--out", tmp_path)
    assert code == 1
    assert "normalization undefined" in error_of(err)["error"]


def test_unknown_field_selection(labeled, tmp_path, capsys):
    code, _, err = run(capsys, "trends", "--corpus", labeled / "label" / "labeled.jsonl",
                       "--fields", "machine_translation,bogus", "--out", tmp_path)
    assert code == 1 and error_of(err)["details"] == ["bogus"]


def test_config_file_and_override(labeled, tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"n": 3, "t": 2021, "split": "mean"}))
    code, _, _ = run(capsys, "trends", "--config", cfg, "--corpus", labeled / "label" / "labeled.jsonl",
                     "--t", 2022, "--out", tmp_path / "o")
    assert code == 0
    res = json.loads((tmp_path / "o" / "trends_manifest.json").read_text())
    assert res["config"]["n"] == 3 and res["config"]["t"] == 2022
    assert res["results"]["window_years"] == [2020, 2022] and res["results"]["split_rule"] == "mean"

    cfg.write_text(json.dumps({"colour": "red"}))
    code, _, err = run(capsys, "trends", "--config", cfg, "--out", tmp_path / "o")
    assert code == 1 and error_of(err)["details"] == ["colour"]


def test_rank_from_corpus(labeled, tmp_path, capsys):
    code, out, _ = run(capsys, "rank", "--corpus", labeled / "label" / "labeled.jsonl",
                       "--fields", "leaves", "--top", 3, "--out", tmp_path)
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "ranking.csv").open()))
    assert [r["rank"] for r in rows] == ["1", "2", "3"]
    counts = [int(r["count"]) for r in rows]
    assert counts == sorted(counts, reverse=True)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fostrends", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "fostrends" in proc.stdout
