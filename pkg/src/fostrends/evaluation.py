"""Micro-averaged and per-class precision/recall/F1 for multi-label predictions."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import AbstractSet, Mapping

LabelMap = Mapping[str, AbstractSet[str]]


class EvaluationError(ValueError):
    def __init__(self, only_gold: list[str], only_pred: list[str]):
        self.only_gold = only_gold
        self.only_pred = only_pred
        parts = []
        if only_gold:
            parts.append("only in gold: " + ", ".join(only_gold))
        if only_pred:
            parts.append("only in predictions: " + ", ".join(only_pred))
        super().__init__("record ids differ; " + "; ".join(parts))


@dataclass(frozen=True)
class PRF:
    """Scores from pooled counts. A zero denominator yields 0 and clears the
    matching ``*_defined`` flag."""

    tp: int
    fp: int
    fn: int

    @property
    def precision_defined(self) -> bool:
        return self.tp + self.fp > 0

    @property
    def recall_defined(self) -> bool:
        return self.tp + self.fn > 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.precision_defined else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.recall_defined else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_json(self) -> dict:
        return {
            **asdict(self),
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "precision_defined": self.precision_defined,
            "recall_defined": self.recall_defined,
        }


def _check_ids(gold: LabelMap, pred: LabelMap) -> None:
    only_gold = sorted(set(gold) - set(pred))
    only_pred = sorted(set(pred) - set(gold))
    if only_gold or only_pred:
        raise EvaluationError(only_gold, only_pred)


def per_class_prf(gold: LabelMap, pred: LabelMap) -> dict[str, PRF]:
    """PRF per field id; fields absent from both gold and predictions are omitted."""
    _check_ids(gold, pred)
    counts: dict[str, list[int]] = {}
    for rid in gold:
        g, p = set(gold[rid]), set(pred[rid])
        for fid in g | p:
            c = counts.setdefault(fid, [0, 0, 0])
            if fid in g and fid in p:
                c[0] += 1
            elif fid in p:
                c[1] += 1
            else:
                c[2] += 1
    return {fid: PRF(*counts[fid]) for fid in sorted(counts)}


def micro_prf(gold: LabelMap, pred: LabelMap) -> PRF:
    """Pool tp/fp/fn over every (record, field) pair, then score once."""
    _check_ids(gold, pred)
    tp = fp = fn = 0
    for rid in gold:
        g, p = set(gold[rid]), set(pred[rid])
        tp += len(g & p)
        fp += len(p - g)
        fn += len(g - p)
    return PRF(tp, fp, fn)


def format_report(micro: PRF, per_class: Mapping[str, PRF]) -> str:
    width = max([len("micro")] + [len(k) for k in per_class])
    lines = [f"{'field':<{width}}  {'P':>6}  {'R':>6}  {'F1':>6}  {'tp':>5}  {'fp':>5}  {'fn':>5}"]

    def row(name: str, m: PRF) -> str:
        flag = "" if m.precision_defined and m.recall_defined else "  *"
        return (
            f"{name:<{width}}  {m.precision:6.4f}  {m.recall:6.4f}  {m.f1:6.4f}"
            f"  {m.tp:5d}  {m.fp:5d}  {m.fn:5d}{flag}"
        )

    lines += [row(fid, m) for fid, m in sorted(per_class.items())]
    lines.append("-" * len(lines[0]))
    lines.append(row("micro", micro))
    lines.append("* zero denominator; score reported as 0")
    return "\n".join(lines) + "\n"
