"""``lambdatracer`` command-line interface.

Exit codes: 0 success, 1 data error, 2 configuration error, 3 degenerate
numerical condition.
"""

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .classifier import SvmModel, TrainConfig, train
from .drift import DriftConfig, default_group, generate_dataset
from .exceptions import ConfigError, DataError, DegenerateTransformError
from .kde import DEFAULT_GRID_POINTS, overlap_matrix
from .loss_model import csv_field, load_group_config, read_loss_file, select_binary, write_loss_file
from .metrics import evaluate, reports_to_csv, reports_to_json
from .pipeline import ablation, run_pipeline, split_dataset, summary_text, write_atomic
from .transform import TransformSpec, alt_transform, default_grid, select_lambda

log = logging.getLogger("lambdatracer")

EXIT_DATA, EXIT_CONFIG, EXIT_DEGENERATE = 1, 2, 3

ALT_CHOICES = ("zscore", "log", "exp", "power", "identity")


# -- argument helpers ------------------------------------------------------


def _add_grid_args(p):
    p.add_argument("--strategy", choices=("mle", "skew", "kurt"), default="mle")
    p.add_argument("--grid-min", type=float, default=-5.0)
    p.add_argument("--grid-max", type=float, default=5.0)
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--target", type=float, default=None,
                   help="moment target for skew/kurt (defaults 0 and 1)")
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--alt", choices=ALT_CHOICES, default=None,
                   help="use a fixed transform instead of Box-Cox")
    p.add_argument("--power", type=float, default=None, help="exponent for --alt power (default 0.5)")


def _add_train_args(p):
    _add_grid_args(p)
    p.add_argument("--c", dest="c_param", type=float, default=1.0)
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--class-weighting", action="store_true")
    p.add_argument("--lambda-fit", choices=("pooled", "positive", "negative"), default="pooled")
    p.add_argument("--solver", choices=("exact", "subgradient"), default="exact")


def _add_drift_args(p):
    p.add_argument("--latent-dim", type=int, default=16)
    p.add_argument("--n-samples", type=int, default=400, help="samples per category")
    p.add_argument("--max-iterations", type=int, default=5)
    p.add_argument("--edit-strength", type=float, default=0.15)
    p.add_argument("--noise-sigma", type=float, default=0.02)


def _grid_from_args(args):
    lo, hi, step = args.grid_min, args.grid_max, args.grid_step
    if not step > 0 or hi < lo:
        raise ConfigError("grid needs --grid-step > 0 and --grid-max >= --grid-min")
    if (lo, hi, step) == (-5.0, 5.0, 0.01):
        return default_grid()
    n = int(round((hi - lo) / step)) + 1
    scale = 1.0 / step
    if abs(scale - round(scale)) < 1e-9:
        # Integer reciprocal steps (0.1, 0.01, ...) give the nearest doubles to the decimals.
        scale = round(scale)
        return (round(lo * scale) + np.arange(n)) / scale
    return lo + step * np.arange(n)


def _train_config(args, seed):
    return TrainConfig(
        strategy=args.strategy,
        transform=args.alt or "boxcox",
        grid=tuple(_grid_from_args(args)),
        target=args.target,
        epsilon=args.epsilon,
        power_exponent=args.power if args.alt == "power" else None,
        c_param=args.c_param,
        iterations=args.iterations,
        seed=seed,
        class_weighting=args.class_weighting,
        lambda_fit=args.lambda_fit,
        solver=args.solver,
    )


def _drift_config(args):
    return DriftConfig(args.latent_dim, args.n_samples, args.max_iterations,
                       args.edit_strength, args.noise_sigma, args.seed)


def _require_file(path, what):
    if not os.path.isfile(path):
        raise ConfigError(f"{what} not found: {path}")
    return path


def _load_dataset(path):
    return read_loss_file(_require_file(path, "input file"))


def _load_group(path):
    return load_group_config(_require_file(path, "group config"))


def _json_dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- commands --------------------------------------------------------------


def cmd_simulate(args):
    cfg = _drift_config(args)
    ds = generate_dataset(cfg)
    fmt = args.format
    out = args.out
    write_atomic(os.path.join(out, f"losses.{fmt}"), write_loss_file(ds, fmt))
    manifest = {
        "tool": "lambdatracer",
        "version": __version__,
        "config": cfg.to_dict(),
        "categories": list(cfg.categories),
        "group": default_group(cfg).to_dict() if cfg.max_iterations else None,
        "n_rows": len(ds),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    write_atomic(os.path.join(out, "manifest.json"), _json_dump(manifest))
    log.info("wrote %d samples to %s", len(ds), out)
    return 0


def cmd_overlap(args):
    ds = _load_dataset(args.input)
    m = overlap_matrix(ds, args.bandwidth, args.grid_points, threads=args.threads)
    if args.out:
        write_atomic(args.out, m.to_csv())
    else:
        sys.stdout.write(m.to_csv())
    if args.json:
        write_atomic(args.json, _json_dump(m.to_dict()))
    return 0


def cmd_transform(args):
    ds = _load_dataset(args.input)
    x = ds.losses()
    if args.alt:
        spec = TransformSpec.alt(args.alt, args.power, args.epsilon)
        values = alt_transform(x, spec)
        sidecar = {"transform": spec.to_dict(), "lambda_star": None, "strategy": None,
                   "objective_curve": []}
    else:
        search = select_lambda(x, args.strategy, _grid_from_args(args), args.target, args.epsilon)
        spec = TransformSpec.boxcox(search.lambda_star, args.epsilon)
        values = alt_transform(x, spec)
        sidecar = {"transform": spec.to_dict(), **search.to_dict()}
    # Same columns as a loss file; transformed values may be negative.
    rows = ["id,category,loss,seed"]
    for s, v in zip(ds.samples, values):
        rows.append(f"{csv_field(s.id)},{csv_field(s.category)},{float(v)!r},"
                    f"{'' if s.seed is None else s.seed}")
    os.makedirs(args.out, exist_ok=True)
    write_atomic(os.path.join(args.out, "transformed.csv"), "\n".join(rows) + "\n")
    write_atomic(os.path.join(args.out, "lambda.json"), _json_dump(sidecar))
    return 0


def cmd_train(args):
    ds = _load_dataset(args.input)
    group = _load_group(args.group)
    config = _train_config(args, args.seed)
    if not args.no_split:
        ds, _ = split_dataset(ds, group, config.seed)
    model = train(select_binary(ds, group, min_per_label=2), config)
    write_atomic(args.out, model.to_json())
    if args.curve:
        write_atomic(args.curve, _json_dump(_curve_dict(model)))
    return 0


def _curve_dict(model):
    return {
        "lambda_star": model.lambda_star,
        "strategy": model.strategy,
        "objective_curve": [[lam, obj if np.isfinite(obj) else None] for lam, obj in model.lambda_curve],
    }


def _load_model(path):
    with open(_require_file(path, "model"), encoding="utf-8") as fh:
        return SvmModel.from_json(fh.read())


def _load_subsets(path):
    if path is None:
        return None
    with open(_require_file(path, "subsets file"), encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or not all(isinstance(v, list) for v in obj.values()):
        raise ConfigError("subsets file must map subset names to category lists")
    return {k: tuple(v) for k, v in obj.items()}


def cmd_evaluate(args):
    model = _load_model(args.model)
    ds = _load_dataset(args.input)
    group = _load_group(args.group)
    if not args.no_split:
        split_seed = model.seed if args.split_seed is None else args.split_seed
        _, ds = split_dataset(ds, group, split_seed)
    reports = evaluate(model, ds, group, _load_subsets(args.subsets))
    if args.out:
        write_atomic(args.out, reports_to_csv(reports))
    else:
        sys.stdout.write(reports_to_csv(reports))
    if args.json:
        write_atomic(args.json, reports_to_json(reports))
    return 0


def cmd_predict(args):
    model = _load_model(args.model)
    ds = _load_dataset(args.input)
    preds = model.predict(ds.losses())
    scores = model.decision_function(ds.losses())
    rows = ["id,category,loss,decision,prediction"]
    for s, d, p in zip(ds.samples, scores, preds):
        rows.append(f"{csv_field(s.id)},{csv_field(s.category)},{s.loss!r},{float(d)!r},{p}")
    text = "\n".join(rows) + "\n"
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_pipeline(args):
    if args.input:
        ds = _load_dataset(args.input)
        if not args.group:
            raise ConfigError("--group is required with --input")
        group = _load_group(args.group)
        drift_cfg = None
    else:
        drift_cfg = _drift_config(args)
        ds = generate_dataset(drift_cfg)
        group = _load_group(args.group) if args.group else default_group(drift_cfg)
    config = _train_config(args, args.seed)
    out = args.out
    os.makedirs(out, exist_ok=True)

    # Compute everything before writing so a failure leaves no partial outputs.
    result = run_pipeline(ds, group, config, args.seed)
    ablations = {}
    if config.transform == "boxcox" and not args.no_ablation:
        ablations = ablation(ds, group, config, args.seed)
    matrix = overlap_matrix(ds, None, DEFAULT_GRID_POINTS, threads=args.threads)

    if drift_cfg is not None:
        write_atomic(os.path.join(out, "losses.csv"), write_loss_file(ds, "csv"))
        write_atomic(os.path.join(out, "manifest.json"), _json_dump({
            "tool": "lambdatracer", "version": __version__, "config": drift_cfg.to_dict(),
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }))
    write_atomic(os.path.join(out, "group.json"), _json_dump(group.to_dict()))
    write_atomic(os.path.join(out, "model.json"), result.model.to_json())
    write_atomic(os.path.join(out, "lambda_curve.json"), _json_dump(_curve_dict(result.model)))
    write_atomic(os.path.join(out, "report.csv"), reports_to_csv(result.reports))
    write_atomic(os.path.join(out, "report.json"), reports_to_json(result.reports))
    write_atomic(os.path.join(out, "overlap.csv"), matrix.to_csv())
    write_atomic(os.path.join(out, "overlap.json"), _json_dump(matrix.to_dict()))
    summary = summary_text(result, group, ablations, matrix)
    write_atomic(os.path.join(out, "summary.txt"), summary)
    if not args.quiet:
        sys.stdout.write(summary)
    return 0


def cmd_report(args):
    with open(_require_file(args.report, "report"), encoding="utf-8") as fh:
        try:
            entries = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed report JSON: {exc}") from exc
    lines = []
    group = entries[0]["group"] if entries else ""
    key = "generated_positive" if args.orientation == "generated" else "manipulated_positive"
    head = f"{'Subset':<22}{'Precision':>10}{'Recall':>10}{'F1':>10}{'Accuracy':>10}"
    lines += [f"group: {group}  (positive event: {args.orientation})", head, "-" * len(head)]
    for e in entries:
        m = e[key]
        lines.append(f"{e['label']:<22}{m['precision']:>10.4f}{m['recall']:>10.4f}"
                     f"{m['f1']:>10.4f}{m['accuracy']:>10.4f}")
    text = "\n".join(lines) + "\n"
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


# -- parser ----------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="lambdatracer", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic loss dataset")
    _add_drift_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("overlap", help="pairwise KDE overlap between categories")
    p.add_argument("--input", required=True)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--json", help="also write the matrix as JSON")
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("transform", help="select lambda and transform losses")
    p.add_argument("--input", required=True)
    _add_grid_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("train", help="train the 1-D SVM")
    p.add_argument("--input", required=True)
    p.add_argument("--group", required=True)
    _add_train_args(p)
    p.add_argument("--seed", type=int, default=0, help="split and model seed")
    p.add_argument("--no-split", action="store_true", help="train on every selected sample")
    p.add_argument("--curve", help="also write the lambda objective curve as JSON")
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--group", required=True)
    p.add_argument("--subsets", help="JSON object mapping subset names to category lists")
    p.add_argument("--split-seed", type=int, default=None, help="default: the model's seed")
    p.add_argument("--no-split", action="store_true", help="evaluate on every selected sample")
    p.add_argument("--out", help="report CSV path (default: stdout)")
    p.add_argument("--json", help="also write the JSON report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="label losses with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("pipeline", help="simulate or load, then calibrate, train, evaluate and report")
    p.add_argument("--input", help="loss file; omit to simulate")
    p.add_argument("--group")
    _add_drift_args(p)
    _add_train_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-ablation", action="store_true", help="skip the identity-transform rerun")
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("report", help="render a JSON report as a text table")
    p.add_argument("--report", required=True)
    p.add_argument("--orientation", choices=("manipulated", "generated"), default="manipulated")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except DegenerateTransformError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
