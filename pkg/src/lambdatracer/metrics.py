"""Confusion counts, detection metrics and group-wise evaluation reports.

The classifier treats generated images as its positive class, but the
reported precision/recall/F1 treat *detecting manipulation* as the positive
event: a true positive is a manipulated image flagged as manipulated.
Reports also carry the generated-as-positive view.

Any ratio with a zero denominator is reported as 0.0, and the ratio's
name is added to ``zero_division``.
"""

import csv
import io
import json
import re
from dataclasses import dataclass, field


from .exceptions import DataError

MANIPULATED = "manipulated"
GENERATED = "generated"

REPORT_COLUMNS = ("group", "subset", "precision", "recall", "f1", "accuracy",
                  "tp", "fp", "fn", "tn", "lambda_star", "strategy")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self):
        """Counts for the opposite positive event."""
        return ConfusionCounts(self.tn, self.fn, self.fp, self.tp)

    @property
    def precision(self):
        return precision(self)

    @property
    def recall(self):
        return recall(self)

    @property
    def f1(self):
        return f1(self)

    @property
    def accuracy(self):
        return accuracy(self)

    def zero_division(self):
        flags = []
        if self.tp + self.fp == 0:
            flags.append("precision")
        if self.tp + self.fn == 0:
            flags.append("recall")
        if precision(self) + recall(self) == 0:
            flags.append("f1")
        if self.total == 0:
            flags.append("accuracy")
        return tuple(flags)

    def to_dict(self):
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion(predictions, truth, positive_event=MANIPULATED):
    predictions = list(predictions)
    truth = list(truth)
    if len(predictions) != len(truth):
        raise DataError(f"length mismatch: {len(predictions)} predictions vs {len(truth)} labels")
    if not truth:
        raise DataError("confusion needs at least one sample")
    tp = fp = fn = tn = 0
    for p, t in zip(predictions, truth):
        if p == positive_event:
            if t == positive_event:
                tp += 1
            else:
                fp += 1
        elif t == positive_event:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def _ratio(num, den):
    return num / den if den else 0.0


def precision(c):
    return _ratio(c.tp, c.tp + c.fp)


def recall(c):
    return _ratio(c.tp, c.tp + c.fn)


def f1_from(p, r):
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


def f1(c):
    return f1_from(precision(c), recall(c))


def accuracy(c):
    return _ratio(c.tp + c.tn, c.total)


@dataclass(frozen=True)
class EvalReport:
    group_name: str
    subset: str
    counts: ConfusionCounts
    lambda_star: float | None = None
    strategy: str | None = None
    categories: tuple = field(default=())

    precision = property(lambda self: precision(self.counts))
    recall = property(lambda self: recall(self.counts))
    f1 = property(lambda self: f1(self.counts))
    accuracy = property(lambda self: accuracy(self.counts))

    @property
    def label(self):
        return table_row_label(self.subset)

    def row(self):
        return {
            "group": self.group_name,
            "subset": self.subset,
            "precision": f"{self.precision:.4f}",
            "recall": f"{self.recall:.4f}",
            "f1": f"{self.f1:.4f}",
            "accuracy": f"{self.accuracy:.4f}",
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "fn": self.counts.fn,
            "tn": self.counts.tn,
            "lambda_star": "" if self.lambda_star is None else repr(self.lambda_star),
            "strategy": self.strategy or "",
        }

    def to_dict(self):
        gen = self.counts.swapped()
        return {
            "group": self.group_name,
            "subset": self.subset,
            "label": self.label,
            "categories": list(self.categories),
            "lambda_star": self.lambda_star,
            "strategy": self.strategy,
            "manipulated_positive": _orientation(self.counts),
            "generated_positive": _orientation(gen),
        }


def _orientation(c):
    return {
        "precision": precision(c),
        "recall": recall(c),
        "f1": f1(c),
        "accuracy": accuracy(c),
        "counts": c.to_dict(),
        "zero_division": list(c.zero_division()),
    }


_ITER_RE = re.compile(r"(?:edit|iter|iteration|p2p|cnet)[-_ ]?(\d+)$", re.IGNORECASE)


def table_row_label(subset):
    """Human row label in the style of published provenance result tables."""
    low = subset.lower()
    if low == "aggregate":
        return "Aggregate Iteration"
    if low == "overall":
        return "Overall"
    if "photoshop" in low:
        return "Photoshop Modified"
    m = _ITER_RE.search(subset)
    if m:
        k = int(m.group(1))
        return f"{k} Iteration"
    return subset


def _natural_key(name):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name)]


def default_subsets(group, ds=None):
    """One subset per negative category (natural order), then ``aggregate``."""
    negs = sorted(group.negative_categories, key=_natural_key)
    subsets = {c: (c,) for c in negs}
    subsets["aggregate"] = tuple(negs)
    return subsets


def evaluate(model, ds, group, manipulated_subsets=None):
    """One report per manipulated subset, then an ``overall`` report.

    Each subset is scored on its own negatives plus every positive of the
    group. ``overall`` covers all positives and all negatives.
    """
    subsets = manipulated_subsets or default_subsets(group, ds)
    missing = (group.positive_categories | group.negative_categories) - set(ds.categories)
    if missing:
        raise DataError(f"categories not in dataset: {sorted(missing)}")
    lambda_star = model.lambda_star
    strategy = model.strategy

    pos_samples = [s for s in ds.samples if s.category in group.positive_categories]
    all_negs = tuple(sorted(group.negative_categories, key=_natural_key))
    plan = list(subsets.items()) + [("overall", all_negs)]

    reports = []
    for name, cats in plan:
        cats = tuple(cats)
        unknown = set(cats) - group.negative_categories
        if unknown:
            raise DataError(f"subset {name!r} lists non-negative categories {sorted(unknown)}")
        neg_samples = [s for s in ds.samples if s.category in cats]
        if not neg_samples:
            raise DataError(f"subset {name!r} has no samples")
        samples = pos_samples + neg_samples
        truth = [GENERATED] * len(pos_samples) + [MANIPULATED] * len(neg_samples)
        preds = model.predict([s.loss for s in samples])
        counts = confusion(preds, truth, MANIPULATED)
        reports.append(EvalReport(group.name, name, counts, lambda_star, strategy, cats))
    return reports


def reports_to_csv(reports):
    buf = io.StringIO(newline="")
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.row())
    return buf.getvalue()


def reports_to_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def render_table(reports):
    """Fixed-width text table: one line per report."""
    head = f"{'Subset':<22}{'Precision':>10}{'Recall':>10}{'F1':>10}{'Accuracy':>10}"
    lines = [head, "-" * len(head)]
    for r in reports:
        lines.append(f"{r.label:<22}{r.precision:>10.4f}{r.recall:>10.4f}{r.f1:>10.4f}{r.accuracy:>10.4f}")
    return "\n".join(lines) + "\n"


