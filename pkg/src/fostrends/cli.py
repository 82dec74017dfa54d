"""``fostrends`` command line: ingest -> label -> trends, plus eval and rank.

Every flag can also come from a JSON run-config file (``--config``); keys are
the flag names with dashes replaced by underscores. Flags given on the command
line win over the file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from fostrends import __version__
from fostrends.corpus import (
    DEFAULT_NON_RESEARCH_PATTERNS,
    CorpusError,
    RecordParseError,
    corpus_stats,
    deduplicate,
    dumps_records,
    filter_research,
    parse_records,
)
from fostrends.evaluation import EvaluationError, format_report, micro_prf, per_class_prf
from fostrends.labeler import (
    MatcherConfig,
    PredictionsError,
    dumps_match_reports,
    import_predictions,
    label_corpus,
    load_label_map,
)
from fostrends.svgplot import lifecycle_svg, quadrant_svg
from fostrends.taxonomy import (
    DEFAULT_TAXONOMY,
    TaxonomyError,
    TaxonomyValidationError,
    Taxonomy,
    ancestors,
    leaves,
    load_taxonomy,
)
from fostrends.trends import (
    TrendsError,
    WindowSpec,
    annual_counts,
    growth_share_matrix,
    lifecycle_components,
    lifecycle_csv,
    lifecycle_points,
    load_counts,
    matrix_csv,
    rank_fields,
    series_csv,
    series_totals,
)
from fostrends.yeojohnson import YJParams

log = logging.getLogger("fostrends")

DEFAULTS: dict[str, Any] = {
    "corpus": None,
    "format": "jsonl",
    "skip_invalid": False,
    "taxonomy": None,
    "predictions": None,
    "gold": None,
    "pred": None,
    "counts": None,
    "out": "out",
    "threshold": 2,
    "max_distance": 1,
    "min_fuzzy_length": 4,
    "threshold_scope": "field",
    "no_token_boundary": False,
    "propagate": None,
    "no_filter": False,
    "non_research_patterns": list(DEFAULT_NON_RESEARCH_PATTERNS),
    "t": 2022,
    "n": 5,
    "observation_start": 1952,
    "split": "median",
    "growth_method": "relative",
    "lambda_min": -5.0,
    "lambda_max": 5.0,
    "lambda_tol": 1e-6,
    "fields": "all",
    "top": 10,
}


class CLIError(Exception):
    def __init__(self, message: str, details: list[str] | None = None):
        super().__init__(message)
        self.details = details or []


@dataclass
class Run:
    """Resolved options plus bookkeeping for the manifest."""

    command: str
    opts: dict[str, Any]
    out: Path
    inputs: dict[str, dict[str, str]] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def __getattr__(self, name: str) -> Any:
        try:
            return self.opts[name]
        except KeyError:
            raise AttributeError(name) from None

    def read_input(self, role: str, path: str | None) -> bytes:
        if path is None:
            raise CLIError(f"missing required input: --{role}")
        p = Path(path)
        if not p.is_file():
            raise CLIError(f"input file not found: {p}")
        data = p.read_bytes()
        self.inputs[role] = {"file": p.name, "sha256": hashlib.sha256(data).hexdigest()}
        return data

    def read_taxonomy(self) -> Taxonomy:
        if self.taxonomy is None:
            data = resources.files("fostrends").joinpath("data", DEFAULT_TAXONOMY).read_bytes()
            self.inputs["taxonomy"] = {
                "file": f"<bundled>/{DEFAULT_TAXONOMY}",
                "sha256": hashlib.sha256(data).hexdigest(),
            }
        else:
            data = self.read_input("taxonomy", self.taxonomy)
        try:
            return load_taxonomy(data)
        except TaxonomyValidationError as exc:
            raise CLIError("taxonomy validation failed", exc.violations) from exc
        except TaxonomyError as exc:
            raise CLIError(f"cannot read taxonomy: {exc}") from exc

    def write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.outputs.append(name)
        return path

    def write_json(self, name: str, obj: Any) -> Path:
        return self.write(name, json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n")

    def write_manifest(self, results: dict[str, Any], config_keys: list[str]) -> None:
        config = {k: self.opts[k] for k in sorted(config_keys)}
        manifest = {
            "tool": "fostrends",
            "version": __version__,
            "command": self.command,
            "config": config,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": sorted(self.outputs),
            "results": results,
        }
        self.write_json(f"{self.command}_manifest.json", manifest)


def _matcher(run: Run) -> MatcherConfig:
    try:
        return MatcherConfig(
            occurrence_threshold=int(run.threshold),
            fuzzy_max_distance=int(run.max_distance),
            token_boundary=not run.no_token_boundary,
            fuzzy_min_token_length=int(run.min_fuzzy_length),
            threshold_scope=run.threshold_scope,
        )
    except ValueError as exc:
        raise CLIError(f"bad matcher settings: {exc}") from exc


def _window(run: Run) -> WindowSpec:
    try:
        return WindowSpec(int(run.t), int(run.n), int(run.observation_start))
    except ValueError as exc:
        raise CLIError(f"bad window: {exc}") from exc


def _records(run: Run, role: str = "corpus"):
    data = run.read_input(role, run.corpus)
    try:
        return parse_records(data, run.format, strict=not run.skip_invalid)
    except RecordParseError as exc:
        raise CLIError(f"{len(exc.errors)} malformed entries in {Path(run.corpus).name}",
                       [str(e) for e in exc.errors]) from exc
    except (CorpusError, ValueError) as exc:
        raise CLIError(f"cannot read {Path(run.corpus).name}: {exc}") from exc


# ---------------------------------------------------------------------- commands


def cmd_ingest(run: Run) -> None:
    records = _records(run)
    merged = deduplicate(records)
    stats = corpus_stats(merged)
    run.write("corpus.jsonl", dumps_records(merged))
    report = {"pre_dedup_count": len(records), "post_dedup_count": len(merged), "stats": stats.to_json()}
    run.write_json("ingest_stats.json", report)
    run.write_manifest(
        {"pre_dedup_count": len(records), "post_dedup_count": len(merged)},
        ["format", "skip_invalid"],
    )
    print(f"ingested {len(records)} records, {len(merged)} after deduplication")
    print(stats.summary(), end="")


def cmd_label(run: Run) -> None:
    taxonomy = run.read_taxonomy()
    cfg = _matcher(run)
    records = _records(run)
    unmatched: list[str] = []
    if run.predictions:
        try:
            records, unmatched = import_predictions(records, run.read_input("predictions", run.predictions))
        except (PredictionsError, UnicodeDecodeError) as exc:
            raise CLIError(f"cannot import predictions: {exc}") from exc
        for rid in unmatched:
            log.warning("prediction for unknown record id %s", rid)
    unknown = sorted({f for r in records for f in r.labels if f not in taxonomy})
    if unknown:
        raise CLIError("labels reference fields missing from the taxonomy", unknown)
    reports: list = []
    labeled = label_corpus(records, taxonomy, cfg, propagate=bool(run.propagate), reports=reports)
    before = len(labeled)
    if not run.no_filter:
        labeled = filter_research(labeled, taxonomy, run.non_research_patterns)
    stats = corpus_stats(labeled)
    run.write("labeled.jsonl", dumps_records(labeled))
    run.write("matches.csv", dumps_match_reports(reports))
    run.write_json(
        "label_stats.json",
        {"filtered_out": before - len(labeled), "unmatched_prediction_ids": unmatched, "stats": stats.to_json()},
    )
    run.write_manifest(
        {"records_in": before, "records_out": len(labeled), "unmatched_prediction_ids": unmatched},
        ["threshold", "max_distance", "min_fuzzy_length", "threshold_scope", "no_token_boundary",
         "propagate", "no_filter", "non_research_patterns"],
    )
    print(f"labeled {before} records, kept {len(labeled)} after filtering")
    print(stats.summary(), end="")


def cmd_eval(run: Run) -> None:
    try:
        gold = load_label_map(run.read_input("gold", run.gold))
        pred = load_label_map(run.read_input("pred", run.pred))
    except (PredictionsError, UnicodeDecodeError) as exc:
        raise CLIError(f"cannot read label file: {exc}") from exc
    if run.propagate:
        taxonomy = run.read_taxonomy()

        def closed(m):
            try:
                return {rid: set(ids).union(*(ancestors(taxonomy, f) for f in ids)) for rid, ids in m.items()}
            except KeyError as exc:
                raise CLIError(f"unknown field id {exc.args[0]}") from exc

        gold, pred = closed(gold), closed(pred)
    try:
        micro = micro_prf(gold, pred)
        per_class = per_class_prf(gold, pred)
    except EvaluationError as exc:
        raise CLIError(str(exc), [f"gold only: {i}" for i in exc.only_gold]
                       + [f"pred only: {i}" for i in exc.only_pred]) from exc
    table = format_report(micro, per_class)
    run.write("metrics.txt", table)
    run.write_json(
        "metrics.json",
        {"micro": micro.to_json(), "per_class": {k: v.to_json() for k, v in per_class.items()}},
    )
    run.write_manifest({"micro_f1": micro.f1}, ["propagate"])
    print(table, end="")


def _select(run: Run, taxonomy: Taxonomy, series: dict) -> list[str]:
    spec = run.fields
    if spec in (None, "all"):
        return sorted(series)
    if spec == "leaves":
        return sorted(leaves(taxonomy))
    ids = [s.strip() for s in str(spec).split(",") if s.strip()]
    missing = [i for i in ids if i not in taxonomy]
    if missing:
        raise CLIError("unknown fields in --fields", missing)
    return sorted(ids)


def cmd_trends(run: Run) -> None:
    taxonomy = run.read_taxonomy()
    window = _window(run)
    records = _records(run)
    propagate = True if run.propagate is None else bool(run.propagate)
    run.opts["propagate"] = propagate
    try:
        series = annual_counts(records, taxonomy, window, propagate=propagate)
    except KeyError as exc:
        raise CLIError(f"record label not in taxonomy: {exc}") from exc
    chosen = _select(run, taxonomy, series)
    names = {fid: taxonomy.nodes[fid].display_name for fid in taxonomy.nodes}
    observed = {f: series[f] for f in chosen if series[f].total(window.observed_years) > 0}
    active = {f: s for f, s in observed.items() if s.total(window.years) > 0}
    params = YJParams(bounds=(float(run.lambda_min), float(run.lambda_max)), tol=float(run.lambda_tol))
    try:
        points = lifecycle_points(lifecycle_components(observed, window, growth_method=run.growth_method))
        matrix = growth_share_matrix(active, window, params, split=run.split, growth_method=run.growth_method)
    except (TrendsError, ValueError) as exc:
        raise CLIError(str(exc)) from exc

    run.write("series.csv", series_csv({f: series[f] for f in chosen}))
    run.write("matrix.csv", matrix_csv(matrix))
    run.write("lifecycle.csv", lifecycle_csv(points))
    run.write("growth_share.svg", quadrant_svg(matrix, names))
    run.write("lifecycle.svg", lifecycle_svg(points, names))
    run.write_manifest(
        {
            "window": asdict(window),
            "window_years": [window.start, window.t],
            "growth_formula": (
                "(c_end - c_start) / max(c_start, 1)" if run.growth_method == "relative"
                else "(c_end / max(c_start, 1)) ** (1 / (n - 1)) - 1"
            ),
            "growth_lambda": matrix.growth_params.lmbda,
            "total_lambda": matrix.total_params.lmbda,
            "lambda_bounds": list(params.bounds),
            "split_rule": matrix.split,
            "growth_cut": matrix.growth_cut,
            "total_cut": matrix.total_cut,
            "x_norm_bounds": [-5.0, 5.0],
            "g_bounds": [1e-10, 1.0],
            "log_base": "e",
            "matrix_fields": len(matrix),
            "lifecycle_fields": len(points),
            "propagate": propagate,
        },
        ["t", "n", "observation_start", "split", "growth_method", "lambda_min", "lambda_max",
         "lambda_tol", "fields", "propagate"],
    )
    counts: dict[str, int] = {}
    for p in matrix:
        counts[p.quadrant] = counts.get(p.quadrant, 0) + 1
    print(f"growth-share matrix over {len(matrix)} fields: "
          + ", ".join(f"{q} {counts[q]}" for q in sorted(counts)))
    print(f"life-cycle positions for {len(points)} fields written to {run.out}")


def cmd_rank(run: Run) -> None:
    if run.counts:
        try:
            totals = load_counts(run.read_input("counts", run.counts))
        except (TrendsError, UnicodeDecodeError) as exc:
            raise CLIError(f"cannot read counts: {exc}") from exc
    else:
        taxonomy = run.read_taxonomy()
        window = _window(run)
        propagate = True if run.propagate is None else bool(run.propagate)
        series = annual_counts(_records(run), taxonomy, window, propagate=propagate)
        totals = {f: n for f, n in series_totals(series).items() if f in _select(run, taxonomy, series)}
    ranked = rank_fields(totals, int(run.top) if run.top else None)
    lines = ["rank,field_id,count"] + [f"{i},{fid},{n}" for i, (fid, n) in enumerate(ranked, 1)]
    run.write("ranking.csv", "\n".join(lines) + "\n")
    run.write_manifest({"ranked": len(ranked)}, ["top", "fields"])
    for i, (fid, n) in enumerate(ranked, 1):
        print(f"{i:>3}  {fid:<45} {n:>8,}")


COMMANDS = {
    "ingest": cmd_ingest,
    "label": cmd_label,
    "eval": cmd_eval,
    "trends": cmd_trends,
    "rank": cmd_rank,
}


# ---------------------------------------------------------------------- parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fostrends", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run-config file")
        sp.add_argument("--out", help="output directory (default: out)")
        return sp

    def corpus_opts(sp, required_help="record file"):
        sp.add_argument("--corpus", help=required_help)
        sp.add_argument("--format", choices=["jsonl", "bibtex"])
        sp.add_argument("--skip-invalid", action="store_true", default=None,
                        help="log and skip malformed entries instead of failing")

    def taxonomy_opt(sp):
        sp.add_argument("--taxonomy", help="taxonomy file (default: bundled)")

    def window_opts(sp):
        sp.add_argument("--t", type=int, help="last window year (default 2022)")
        sp.add_argument("--n", type=int, help="window length in years (default 5)")
        sp.add_argument("--observation-start", type=int, help="first observed year (default 1952)")
        sp.add_argument("--fields", help="'all', 'leaves', or comma-separated field ids")
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--propagate", dest="propagate", action="store_true", default=None)
        g.add_argument("--no-propagate", dest="propagate", action="store_false")

    sp = common(sub.add_parser("ingest", help="parse, deduplicate, and summarize a corpus"))
    corpus_opts(sp)

    sp = common(sub.add_parser("label", help="weakly label a corpus"))
    corpus_opts(sp, "ingested corpus (JSONL)")
    taxonomy_opt(sp)
    sp.add_argument("--predictions", help="external predictions to import (JSONL)")
    sp.add_argument("--threshold", type=int, help="minimum keyword mentions per field (default 2)")
    sp.add_argument("--max-distance", type=int, help="per-token edit distance (default 1)")
    sp.add_argument("--min-fuzzy-length", type=int, help="shorter keyword tokens match exactly (default 4)")
    sp.add_argument("--threshold-scope", choices=["field", "keyword"])
    sp.add_argument("--no-token-boundary", action="store_true", default=None)
    sp.add_argument("--propagate", action="store_true", default=None, help="add ancestor labels")
    sp.add_argument("--no-filter", action="store_true", default=None, help="keep non-research records")

    sp = common(sub.add_parser("eval", help="micro and per-class precision/recall/F1"))
    sp.add_argument("--gold", help="gold labels (JSONL id/labels)")
    sp.add_argument("--pred", help="predicted labels (JSONL id/labels)")
    taxonomy_opt(sp)
    sp.add_argument("--propagate", action="store_true", default=None,
                    help="close both label sets under taxonomy ancestors first")

    sp = common(sub.add_parser("trends", help="series, growth-share matrix, life cycle, SVG plots"))
    corpus_opts(sp, "labeled corpus (JSONL)")
    taxonomy_opt(sp)
    window_opts(sp)
    sp.add_argument("--split", choices=["median", "mean"])
    sp.add_argument("--growth-method", choices=["relative", "cagr"])
    sp.add_argument("--lambda-min", type=float)
    sp.add_argument("--lambda-max", type=float)
    sp.add_argument("--lambda-tol", type=float)

    sp = common(sub.add_parser("rank", help="rank fields by paper count"))
    sp.add_argument("--counts", help="pre-aggregated counts CSV (field_id,count)")
    corpus_opts(sp, "labeled corpus (used when --counts is absent)")
    taxonomy_opt(sp)
    window_opts(sp)
    sp.add_argument("--top", type=int, help="number of fields to list (default 10, 0 = all)")
    return p


def resolve(args: argparse.Namespace) -> Run:
    file_cfg: dict[str, Any] = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise CLIError(f"config file not found: {path}")
        try:
            file_cfg = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CLIError(f"bad config file {path}: {exc}") from exc
        unknown = sorted(set(file_cfg) - set(DEFAULTS))
        if unknown:
            raise CLIError("unknown config keys", unknown)
    opts = {}
    for key, default in DEFAULTS.items():
        cli_value = getattr(args, key, None)
        opts[key] = cli_value if cli_value is not None else file_cfg.get(key, default)
    return Run(args.command, opts, Path(opts["out"]))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        run = resolve(args)
        COMMANDS[args.command](run)
    except CLIError as exc:
        print(json.dumps({"error": str(exc), "details": exc.details}, ensure_ascii=False), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
