"""Command-line interface: scoring, training, evaluation, baselines.

Logs go to standard error, the score to standard output, everything else
to files, so the tool composes in shell pipelines. The parsed argument
namespace is the run configuration; heavyweight imports happen after
argument parsing so --deterministic can pin the thread environment before
the array library initializes.

Exit codes: 0 success, 2 input error, 3 model/weights error, 4 numeric
failure.
"""

import argparse
import os
import sys

from .errors import InputError, ManifestError, ModelError, VfiqaError

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)

BASELINE_METRICS = ("psnr", "ssim")


def _log(msg):
    print(msg, file=sys.stderr)


def _pin_threads():
    # effective only before the array library first loads; dispatch defers
    # heavy imports until after this runs
    for var in _THREAD_VARS:
        os.environ[var] = "1"


def _add_common(p):
    p.add_argument(
        "--deterministic",
        action="store_true",
        help="pin thread configuration for byte-identical artifacts",
    )


def _add_mode(p):
    p.add_argument(
        "--mode",
        choices=["both", "left_only"],
        default="both",
        help="compare against both neighbors or the first one only",
    )


def _add_train_flags(p):
    p.add_argument("--initial-lr", type=float, default=1e-4)
    p.add_argument("--lr-halving-interval", type=int, default=50)
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--adam-beta1", type=float, default=0.9)
    p.add_argument("--adam-beta2", type=float, default=0.999)
    p.add_argument("--adam-eps", type=float, default=1e-8)
    p.add_argument("--init-alpha", type=float, default=1.0 / 12.0)
    p.add_argument("--init-beta", type=float, default=1.0 / 12.0)


def _add_split_flags(p):
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vfiqa",
        description="Frame-interpolation quality scoring from feature coherence",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("score", help="score one interpolated frame")
    p.add_argument("i0", help="first neighbor frame (PNG)")
    p.add_argument("it", help="interpolated frame (PNG)")
    p.add_argument("i1", help="second neighbor frame (PNG)")
    p.add_argument("--weights", required=True, help="backbone weight file (VFIW)")
    p.add_argument("--model", required=True, help="learned weights (JSON)")
    _add_mode(p)
    _add_common(p)

    p = sub.add_parser("train", help="fit model weights to a labeled manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--log", help="training log CSV (default: out-model + .log.csv)")
    p.add_argument(
        "--oracle",
        action="store_true",
        help="fit with the closed-form least-squares solver instead",
    )
    _add_mode(p)
    _add_train_flags(p)
    _add_common(p)

    p = sub.add_parser("eval", help="repeated-split evaluation protocol")
    p.add_argument("--manifest", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--method", help="row label for the comparison table")
    p.add_argument(
        "--baseline",
        help="comma-separated full-reference baselines to add (psnr,ssim); "
        "needs a path_ref manifest column",
    )
    _add_mode(p)
    _add_split_flags(p)
    _add_train_flags(p)
    _add_common(p)

    p = sub.add_parser("baseline", help="full-reference baseline against MOS")
    p.add_argument("--manifest", required=True, help="manifest with a path_ref column")
    p.add_argument("--metric", required=True)
    p.add_argument("--out-dir", required=True)
    _add_common(p)

    p = sub.add_parser("features", help="dump the similarity table CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    _add_mode(p)
    _add_common(p)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "deterministic", False):
        _pin_threads()
    try:
        return _dispatch(args)
    except VfiqaError as exc:
        _log(f"error: {exc}")
        return exc.exit_code


def _dispatch(args):
    if args.subcommand == "score":
        return cmd_score(args.i0, args.it, args.i1, args.weights, args.model, args.mode)
    if args.subcommand == "train":
        return cmd_train(args)
    if args.subcommand == "eval":
        return cmd_eval(args)
    if args.subcommand == "baseline":
        return cmd_baseline(args.manifest, args.metric, args.out_dir)
    if args.subcommand == "features":
        return cmd_features(args)
    raise InputError(f"unknown subcommand {args.subcommand!r}")


def _train_config(args):
    from .trainer import TrainConfig

    return TrainConfig(
        initial_lr=args.initial_lr,
        lr_halving_interval=args.lr_halving_interval,
        max_iterations=args.max_iterations,
        adam_beta1=args.adam_beta1,
        adam_beta2=args.adam_beta2,
        adam_eps=args.adam_eps,
        init_alpha=args.init_alpha,
        init_beta=args.init_beta,
    )


def cmd_score(i0, it, i1, weights_path, model_path, mode="both"):
    """Score one triplet: the scalar score on stdout, then the per-stage
    similarity terms."""
    from .backbone import extract_features, load_weights
    from .coherence import coherence_score, load_model_weights, similarity_features
    from .image_io import load_frame, to_model_input

    weights = load_weights(weights_path)
    model = load_model_weights(model_path)
    if model.backbone and model.backbone != weights.arch:
        raise ModelError(
            f"model was trained for backbone {model.backbone!r}, "
            f"weight file provides {weights.arch!r}"
        )
    frames = {}
    for name, path in (("i0", i0), ("it", it), ("i1", i1)):
        frames[name] = load_frame(path)
    ref = frames["i0"]
    for name, path in (("it", it), ("i1", i1)):
        f = frames[name]
        if f.data.shape != ref.data.shape:
            raise InputError(
                f"{path}: dimensions {f.width}x{f.height} do not match "
                f"{i0} ({ref.width}x{ref.height})"
            )
    _log(f"scoring {it} against {i0} and {i1} ({weights.arch} backbone, mode {mode})")
    stacks = {
        name: extract_features(to_model_input(f), f, weights)
        for name, f in frames.items()
    }
    feat = similarity_features(stacks["i0"], stacks["it"], stacks["i1"])
    score = coherence_score(feat, model, mode=mode)
    print(repr(score))
    values = feat.values(mode)
    for i in range(6):
        print(f"stage {i}: luminance {values[i]!r} structure {values[6 + i]!r}")
    return 0


def cmd_train(args):
    """Fit weights on a labeled manifest; writes model JSON and a log CSV."""
    import csv

    from .backbone import load_weights
    from .coherence import save_model_weights
    from .core import load_manifest
    from .trainer import least_squares_fit, mse_loss, precompute_similarities, train

    manifest = load_manifest(args.manifest)
    weights = load_weights(args.weights)
    cfg = _train_config(args)
    _log(f"computing similarity features for {len(manifest)} records")
    table = precompute_similarities(manifest, weights, mode=args.mode)
    log_path = args.log or args.out_model + ".log.csv"
    rows = []
    if args.oracle:
        model = least_squares_fit(table)
        final = mse_loss(_predict(table, model), table.mos)
        rows.append([0, "", repr(final)])
        _log(f"least-squares fit: mse {final!r}")
    else:
        model = train(
            table, cfg, on_iteration=lambda k, lr, loss: rows.append([k, repr(lr), repr(loss)])
        )
        final = mse_loss(_predict(table, model), table.mos)
        rows.append([cfg.max_iterations, "", repr(final)])
        _log(f"trained {cfg.max_iterations} iterations: final mse {final!r}")
    with open(log_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "lr", "loss"])
        writer.writerows(rows)
    save_model_weights(model, args.out_model)
    _log(f"wrote {args.out_model} and {log_path}")
    return 0


def _predict(table, model):
    import numpy as np

    return table.features @ np.concatenate([model.alpha, model.beta])


def cmd_eval(args):
    """Run the repeated-split protocol; writes report, scatters, table."""
    from .backbone import load_weights
    from .core import SplitConfig, load_manifest
    from .metrics import evaluate_protocol
    from .report import (
        table_row,
        write_report_json,
        write_scatter_csv,
        write_scatter_svg,
        write_table,
    )

    manifest = load_manifest(args.manifest)
    weights = load_weights(args.weights)
    split_cfg = SplitConfig(
        train_fraction=args.train_fraction, repeats=args.repeats, seed=args.seed
    )
    train_cfg = _train_config(args)
    os.makedirs(args.out_dir, exist_ok=True)
    _log(
        f"evaluating {len(manifest)} records: {args.repeats} repeats at "
        f"{args.train_fraction:.0%} training fraction"
    )
    report = evaluate_protocol(
        manifest, None, weights, split_cfg, train_cfg, mode=args.mode, method=args.method
    )
    write_report_json(report, os.path.join(args.out_dir, "report.json"))
    for res in report.repeats:
        write_scatter_csv(res, os.path.join(args.out_dir, f"scatter_r{res.index}.csv"))
        write_scatter_svg(
            res,
            os.path.join(args.out_dir, f"scatter_r{res.index}.svg"),
            f"{report.method} repeat {res.index}",
        )
    rows = [table_row(report.method, report.averages)]
    for metric in _parse_baselines(args.baseline):
        rows.append(table_row(metric, _baseline_criteria(manifest, metric)))
    write_table(rows, os.path.join(args.out_dir, "table.txt"))
    avg = report.averages
    _log(
        f"averaged SRCC {avg['srcc']:.4f} KRCC {avg['krcc']:.4f} "
        f"PLCC {avg['plcc']:.4f} RMSE {avg['rmse']:.4f}"
    )
    return 0


def _parse_baselines(spec_str):
    if not spec_str:
        return []
    metrics = [m.strip() for m in spec_str.split(",") if m.strip()]
    for m in metrics:
        if m not in BASELINE_METRICS:
            raise InputError(
                f"unsupported baseline {m!r}; supported: {', '.join(BASELINE_METRICS)}"
            )
    return metrics


def _baseline_values(manifest, metric):
    from .image_io import load_frame
    from .metrics import psnr, ssim

    fn = {"psnr": psnr, "ssim": ssim}[metric]
    if not manifest.has_mos:
        raise ManifestError("baselines need a mos label on every record")
    values = []
    for rec in manifest.records:
        if rec.path_ref is None:
            raise ManifestError(
                f"record {rec.id!r} has no path_ref; baselines need a reference column"
            )
        values.append(fn(load_frame(rec.path_it), load_frame(rec.path_ref)))
    return values


def _baseline_criteria(manifest, metric):
    from .metrics import krcc, logistic_map, plcc, rmse, srcc

    values = _baseline_values(manifest, metric)
    mos = [rec.mos for rec in manifest.records]
    fit = logistic_map(values, mos)
    return {
        "srcc": srcc(values, mos),
        "krcc": krcc(values, mos),
        "plcc": plcc(fit.mapped, mos),
        "rmse": rmse(fit.mapped, mos),
        "plcc_raw": plcc(values, mos),
        "rmse_raw": rmse(values, mos),
        "logistic_fallback": fit.fallback,
    }


def cmd_baseline(manifest_path, metric, out_dir):
    """Per-record full-reference values plus the four criteria against MOS.

    The per-record CSV is written before the criteria are computed, so a
    degenerate metric (every value identical) still leaves the values on
    disk while the correlation error surfaces through the exit code.
    """
    import csv
    import json
    import math

    from .core import load_manifest

    if metric not in BASELINE_METRICS:
        raise InputError(
            f"unsupported baseline {metric!r}; supported: {', '.join(BASELINE_METRICS)}"
        )
    manifest = load_manifest(manifest_path)
    values = _baseline_values(manifest, metric)
    os.makedirs(out_dir, exist_ok=True)
    records_path = os.path.join(out_dir, f"baseline_{metric}_records.csv")
    with open(records_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", metric])
        for rec, v in zip(manifest.records, values):
            writer.writerow([rec.id, "identical" if math.isinf(v) else repr(float(v))])
    _log(f"wrote {records_path}")
    criteria = _baseline_criteria(manifest, metric)
    out_path = os.path.join(out_dir, f"baseline_{metric}.json")
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(criteria, fh, sort_keys=True, indent=2)
        fh.write("\n")
    _log(
        f"{metric}: SRCC {criteria['srcc']:.4f} KRCC {criteria['krcc']:.4f} "
        f"PLCC {criteria['plcc']:.4f} RMSE {criteria['rmse']:.4f}"
    )
    return 0


def cmd_features(args):
    """Dump the similarity table for a manifest."""
    from .backbone import load_weights
    from .core import load_manifest
    from .trainer import precompute_similarities, write_similarity_table

    manifest = load_manifest(args.manifest)
    weights = load_weights(args.weights)
    table = precompute_similarities(manifest, weights, mode=args.mode)
    write_similarity_table(table, args.out)
    _log(f"wrote {args.out} ({len(table)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
