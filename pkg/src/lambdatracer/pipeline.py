"""End-to-end composition: split, calibrate, train, evaluate."""

import os
import tempfile
from dataclasses import dataclass, replace

from .classifier import TrainConfig, split_indices, train
from .loss_model import select_binary
from .metrics import evaluate, render_table


def split_dataset(ds, group, seed=0, train_fraction=0.5):
    """Stratified train/test split of the samples selected by ``group``.

    Samples outside the group are dropped from both halves.
    """
    labeled = select_binary(ds, group)
    train_idx, test_idx = split_indices(labeled, seed, train_fraction)
    train_keys = {(labeled.ids[i], labeled.categories[i]) for i in train_idx}
    test_keys = {(labeled.ids[i], labeled.categories[i]) for i in test_idx}
    return (ds.subset(lambda s: (s.id, s.category) in train_keys),
            ds.subset(lambda s: (s.id, s.category) in test_keys))


@dataclass(frozen=True)
class PipelineResult:
    model: object
    reports: list
    train_set: object
    test_set: object

    @property
    def overall(self):
        return next(r for r in self.reports if r.subset == "overall")


def run_pipeline(ds, group, config=None, split_seed=None, subsets=None):
    """Train on the training half and report on the held-out half."""
    config = config or TrainConfig()
    split_seed = config.seed if split_seed is None else split_seed
    train_ds, test_ds = split_dataset(ds, group, split_seed)
    model = train(select_binary(train_ds, group, min_per_label=2), config)
    reports = evaluate(model, test_ds, group, subsets)
    return PipelineResult(model, reports, train_ds, test_ds)


def ablation(ds, group, config=None, split_seed=None, kinds=("identity",)):
    """Re-run the pipeline with each fixed transform in ``kinds`` in place of Box-Cox."""
    config = config or TrainConfig()
    return {kind: run_pipeline(ds, group, replace(config, transform=kind), split_seed)
            for kind in kinds}


def summary_text(result, group, ablations=None, overlap=None):
    m = result.model
    lines = [f"group: {group.name}"]
    lines.append(f"positive: {', '.join(sorted(group.positive_categories))}")
    lines.append(f"negative: {', '.join(sorted(group.negative_categories))}")
    lines.append(f"train samples: {len(result.train_set)}  test samples: {len(result.test_set)}")
    if m.lambda_spec.kind == "boxcox":
        lines.append(f"transform: box-cox, lambda* = {m.lambda_spec.lmbda!r} ({m.strategy})")
    else:
        lines.append(f"transform: {m.lambda_spec.kind}")
    lines.append(f"svm: weight = {m.weight!r}, bias = {m.bias!r}")
    lines.append("")
    lines.append(render_table(result.reports))
    if ablations:
        lines.append("ablation (held-out, overall):")
        lines.append(f"  {m.lambda_spec.kind:<10} F1 = {result.overall.f1:.4f}")
        for kind, res in ablations.items():
            lines.append(f"  {kind:<10} F1 = {res.overall.f1:.4f}")
        lines.append("")
    if overlap is not None:
        lines.append(f"overlap matrix: {len(overlap.categories)} categories")
    return "\n".join(lines).rstrip("\n") + "\n"



def write_atomic(path, data):
    """Write ``data`` (bytes or str) to ``path`` via a temp file and rename."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
