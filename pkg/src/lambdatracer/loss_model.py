"""Loss-sample data model, on-disk formats and group selection.

A dataset is an ordered collection of scalar reconstruction losses, each
tagged with the category (generator or editing pipeline) that produced the
image. Two interchangeable encodings are supported:

CSV
    UTF-8, LF line endings, header ``id,category,loss,seed``. The ``seed``
    column may be omitted on input or left empty per row.
JSON
    A top-level array of ``{"id", "category", "loss", "seed"?}`` objects.

Losses are written with ``repr(float)``, the shortest decimal string that
reads back to the same double, so ``parse_loss_file(write_loss_file(d))``
reproduces ``d`` exactly.
"""

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DataError, LossFileError

CSV_HEADER = ("id", "category", "loss", "seed")

POSITIVE = "generated"
NEGATIVE = "manipulated"


@dataclass(frozen=True)
class LossSample:
    id: str
    category: str
    loss: float
    seed: int | None = None

    def __post_init__(self):
        if not isinstance(self.id, str):
            raise DataError(f"sample id must be a string, got {self.id!r}")
        if not isinstance(self.category, str) or not self.category:
            raise DataError("sample category must be a nonempty string")
        if "\x00" in self.id or "\x00" in self.category:
            raise DataError("sample id and category must not contain NUL characters")
        loss = float(self.loss)
        if not math.isfinite(loss):
            raise DataError(f"non-finite loss for sample {self.id!r}")
        if loss < 0:
            raise DataError(f"negative loss for sample {self.id!r}")
        object.__setattr__(self, "loss", loss)
        if self.seed is not None and (isinstance(self.seed, bool) or not isinstance(self.seed, int)):
            raise DataError(f"seed must be an integer, got {self.seed!r}")


@dataclass(frozen=True)
class LossDataset:
    samples: tuple = ()

    def __post_init__(self):
        samples = tuple(self.samples)
        seen = set()
        for s in samples:
            if not isinstance(s, LossSample):
                raise TypeError(f"expected LossSample, got {type(s).__name__}")
            key = (s.id, s.category)
            if key in seen:
                raise DataError(f"duplicate (id, category) pair {key!r}")
            seen.add(key)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    @property
    def categories(self):
        """Category names in order of first appearance."""
        return tuple(dict.fromkeys(s.category for s in self.samples))

    def losses(self, category=None):
        if category is None:
            return np.array([s.loss for s in self.samples], dtype=np.float64)
        return np.array([s.loss for s in self.samples if s.category == category], dtype=np.float64)

    def by_category(self):
        out = {c: [] for c in self.categories}
        for s in self.samples:
            out[s.category].append(s.loss)
        return {c: np.asarray(v, dtype=np.float64) for c, v in out.items()}

    def subset(self, keep):
        """New dataset with the samples for which ``keep(sample)`` is true."""
        return LossDataset(tuple(s for s in self.samples if keep(s)))


@dataclass(frozen=True)
class GroupConfig:
    name: str
    positive_categories: frozenset
    negative_categories: frozenset

    def __post_init__(self):
        pos = frozenset(self.positive_categories)
        neg = frozenset(self.negative_categories)
        if not pos or not neg:
            raise ConfigError(f"group {self.name!r}: positive and negative sets must be nonempty")
        overlap = pos & neg
        if overlap:
            raise ConfigError(f"group {self.name!r}: categories on both sides: {sorted(overlap)}")
        object.__setattr__(self, "positive_categories", pos)
        object.__setattr__(self, "negative_categories", neg)

    def to_dict(self):
        return {
            "name": self.name,
            "positive": sorted(self.positive_categories),
            "negative": sorted(self.negative_categories),
        }

    @classmethod
    def from_dict(cls, obj):
        try:
            return cls(obj["name"], frozenset(obj["positive"]), frozenset(obj["negative"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed group config: {exc}") from exc


def load_group_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"group config {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("group config must be a JSON object")
    return GroupConfig.from_dict(obj)


@dataclass(frozen=True)
class LabeledLosses:
    """Parallel arrays of losses and labels (``generated`` / ``manipulated``).

    ``ids`` and ``categories`` carry provenance for splitting and reporting.
    """

    losses: np.ndarray
    labels: tuple
    ids: tuple = field(default=())
    categories: tuple = field(default=())

    def __post_init__(self):
        losses = np.asarray(self.losses, dtype=np.float64).ravel()
        labels = tuple(self.labels)
        if losses.shape[0] != len(labels):
            raise DataError("losses and labels differ in length")
        bad = set(labels) - {POSITIVE, NEGATIVE}
        if bad:
            raise DataError(f"unknown labels {sorted(bad)}")
        losses.setflags(write=False)
        object.__setattr__(self, "losses", losses)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    @property
    def y(self):
        """Labels as +1 (generated) / -1 (manipulated)."""
        return np.array([1.0 if lab == POSITIVE else -1.0 for lab in self.labels])

    def counts(self):
        n_pos = sum(1 for lab in self.labels if lab == POSITIVE)
        return n_pos, len(self.labels) - n_pos

    def check_trainable(self, min_per_label=1):
        n_pos, n_neg = self.counts()
        if n_pos < min_per_label or n_neg < min_per_label:
            raise DataError(
                f"need at least {min_per_label} sample(s) per label, got "
                f"{n_pos} generated / {n_neg} manipulated"
            )

    def take(self, idx):
        idx = list(idx)
        return LabeledLosses(
            self.losses[idx],
            tuple(self.labels[i] for i in idx),
            tuple(self.ids[i] for i in idx) if self.ids else (),
            tuple(self.categories[i] for i in idx) if self.categories else (),
        )

    @classmethod
    def from_arrays(cls, positives, negatives):
        pos = np.asarray(positives, dtype=np.float64).ravel()
        neg = np.asarray(negatives, dtype=np.float64).ravel()
        return cls(np.concatenate([pos, neg]), (POSITIVE,) * pos.size + (NEGATIVE,) * neg.size)


# -- parsing ---------------------------------------------------------------


def _parse_seed(raw, line):
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise LossFileError(f"invalid seed {raw!r}", line) from None


def _make_sample(sid, category, loss, seed, line):
    if not isinstance(sid, str) or not sid:
        raise LossFileError("missing id", line)
    if not isinstance(category, str) or not category:
        raise LossFileError("missing category", line)
    if isinstance(loss, bool) or not isinstance(loss, (int, float)):
        raise LossFileError(f"invalid loss {loss!r}", line)
    loss = float(loss)
    if not math.isfinite(loss):
        raise LossFileError("non-finite loss", line)
    if loss < 0:
        raise LossFileError("negative loss", line)
    return LossSample(sid, category, loss, seed)


def _parse_csv(text):
    rows = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(rows)
    except StopIteration:
        raise LossFileError("empty file", 1) from None
    header = [h.strip() for h in header]
    if tuple(header) not in (CSV_HEADER, CSV_HEADER[:3]):
        raise LossFileError(f"bad header {','.join(header)!r}, expected {','.join(CSV_HEADER)!r}", 1)
    width = len(header)
    samples = []
    seen = set()
    for row in rows:
        line = rows.line_num
        if not row:
            continue
        if len(row) == 3 and width == 4:
            row = row + [""]
        if len(row) != width:
            raise LossFileError(f"expected {width} fields, got {len(row)}", line)
        sid, category, raw_loss = row[0], row[1], row[2]
        try:
            loss = float(raw_loss)
        except ValueError:
            raise LossFileError(f"invalid loss {raw_loss!r}", line) from None
        seed = _parse_seed(row[3] if width == 4 else None, line)
        sample = _make_sample(sid, category, loss, seed, line)
        key = (sid, category)
        if key in seen:
            raise LossFileError(f"duplicate (id, category) {key!r}", line)
        seen.add(key)
        samples.append(sample)
    return LossDataset(tuple(samples))


def _parse_json(text):
    try:
        records = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LossFileError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(records, list):
        raise LossFileError("top-level JSON value must be an array")
    samples = []
    seen = set()
    # "line" here is the 1-based record index; JSON has no row structure.
    for i, rec in enumerate(records, start=1):
        if not isinstance(rec, dict):
            raise LossFileError("record is not an object", i)
        missing = {"id", "category", "loss"} - rec.keys()
        if missing:
            raise LossFileError(f"missing keys {sorted(missing)}", i)
        seed = rec.get("seed")
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
            raise LossFileError(f"invalid seed {seed!r}", i)
        sample = _make_sample(rec["id"], rec["category"], rec["loss"], seed, i)
        key = (sample.id, sample.category)
        if key in seen:
            raise LossFileError(f"duplicate (id, category) {key!r}", i)
        seen.add(key)
        samples.append(sample)
    return LossDataset(tuple(samples))


def parse_loss_file(data, format="csv"):
    """Parse bytes (or text) into a validated :class:`LossDataset`."""
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LossFileError(f"input is not UTF-8: {exc.reason}") from None
    else:
        text = data
    if format == "csv":
        return _parse_csv(text)
    if format == "json":
        return _parse_json(text)
    raise ConfigError(f"unknown loss file format {format!r}")


def csv_field(text):
    """Quote a CSV field when it holds a delimiter, quote or line break.

    ``csv.writer`` with an LF terminator leaves a bare CR unquoted, which
    then splits the row on reading, so quoting is done here explicitly.
    """
    if any(ch in text for ch in ',"\n\r'):
        return '"' + text.replace('"', '""') + '"'
    return text


def write_loss_file(ds, format="csv"):
    if format == "csv":
        lines = [",".join(CSV_HEADER)]
        for s in ds.samples:
            lines.append(f"{csv_field(s.id)},{csv_field(s.category)},{s.loss!r},"
                         f"{'' if s.seed is None else s.seed}")
        return ("\n".join(lines) + "\n").encode("utf-8")
    if format == "json":
        records = []
        for s in ds.samples:
            rec = {"id": s.id, "category": s.category, "loss": s.loss}
            if s.seed is not None:
                rec["seed"] = s.seed
            records.append(rec)
        return (json.dumps(records, indent=1) + "\n").encode("utf-8")
    raise ConfigError(f"unknown loss file format {format!r}")


def format_from_path(path):
    return "json" if str(path).lower().endswith(".json") else "csv"


def read_loss_file(path, format=None):
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_loss_file(data, format or format_from_path(path))


def select_binary(ds, group, *, min_per_label=0):
    """Label the samples of ``ds`` according to ``group``.

    Samples whose category belongs to neither side are dropped. With
    ``min_per_label=0`` (evaluation use) a missing label only warns; training
    callers pass ``min_per_label=1`` or more to make it an error.
    """
    present = set(ds.categories)
    unknown = (group.positive_categories | group.negative_categories) - present
    if unknown:
        raise DataError(f"group {group.name!r} references unknown categories {sorted(unknown)}")
    losses, labels, ids, cats = [], [], [], []
    for s in ds.samples:
        if s.category in group.positive_categories:
            labels.append(POSITIVE)
        elif s.category in group.negative_categories:
            labels.append(NEGATIVE)
        else:
            continue
        losses.append(s.loss)
        ids.append(s.id)
        cats.append(s.category)
    out = LabeledLosses(np.asarray(losses, dtype=np.float64), tuple(labels), tuple(ids), tuple(cats))
    n_pos, n_neg = out.counts()
    if min_per_label > 0:
        out.check_trainable(min_per_label)
    elif n_pos == 0 or n_neg == 0:
        warnings.warn(f"group {group.name!r} selects {n_pos} generated / {n_neg} manipulated samples")
    return out
