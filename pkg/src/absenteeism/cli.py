"""Command line interface.

Subcommands: train, evaluate, importance, predict, serve. Global flags
(--seed, --data, --model, --config, --quiet) may appear before or after
the subcommand. Exit code is 0 exactly when the command succeeded;
handled failures print one error line to stderr and return 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .experiment import (ExperimentConfig, MODEL_KINDS, aggregate_metrics,
                         manifest_dict, predict_kind, run_benchmark,
                         run_importance, score_kind_name, select_best)
from .ingest import AbsenteeismClass, parse_dataset, to_hire_time
from .metrics import evaluate_predictions
from .persistence import (bundle_from_model, canonical_json, load_bundle,
                          save_bundle, sha256_hex, model_from_bundle)
from .preprocess import apply_scaler, encode, encode_input
from .service import create_app, validate_payload


def _common_flags(parser: argparse.ArgumentParser, suppress: bool = False) -> None:
    # Subcommand copies default to SUPPRESS so a flag placed before the
    # subcommand is not clobbered by the subparser's defaults.
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=d,
                        help="override the experiment seed")
    parser.add_argument("--data", type=str, default=d,
                        help="path to the dataset export")
    parser.add_argument("--model", type=str, default=d,
                        help="path to a saved model bundle")
    parser.add_argument("--config", type=str, default=d,
                        help="JSON experiment configuration file")
    parser.add_argument("--quiet", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="suppress progress and summary output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="absenteeism",
                                     description=__doc__.splitlines()[0])
    _common_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the experiment and save a bundle")
    _common_flags(p_train, suppress=True)
    p_train.add_argument("--out", type=str, default="model.absmodel",
                         help="bundle output path")
    p_train.add_argument("--kind", choices=MODEL_KINDS, default="mlr",
                         help="model kind to save (ignored with --select-best)")
    p_train.add_argument("--select-best", action="store_true",
                         help="train all model kinds and save the selected one")
    p_train.add_argument("--reps", type=int, default=None,
                         help="override the number of repetitions")

    p_eval = sub.add_parser("evaluate", help="score a bundle against a dataset")
    _common_flags(p_eval, suppress=True)

    p_imp = sub.add_parser("importance", help="rank attributes by forest importance")
    _common_flags(p_imp, suppress=True)
    p_imp.add_argument("--trees", type=int, default=500)

    p_pred = sub.add_parser("predict", help="predict one payload with a bundle")
    _common_flags(p_pred, suppress=True)
    p_pred.add_argument("--input", type=str, default="-",
                        help="payload JSON file, '-' for stdin")

    p_serve = sub.add_parser("serve", help="run the prediction service")
    _common_flags(p_serve, suppress=True)
    p_serve.add_argument("--host", type=str, default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--static-dir", type=str, default=None,
                         help="directory of web UI assets to serve at /")

    return parser


def _load_config(args) -> ExperimentConfig:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = ExperimentConfig.from_dict(json.load(fh))
    else:
        config = ExperimentConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.data is not None:
        config = replace(config, data_path=args.data)
    if getattr(args, "reps", None) is not None:
        config = replace(config, repetitions=args.reps)
    return config


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _print_table(agg: dict) -> None:
    print(f"{'model':<6} {'accuracy':>9} {'weighted_f1':>12} {'auc':>7}")
    for kind, stats in agg.items():
        auc = stats["auc"]["median"]
        auc_s = f"{auc:.4f}" if not np.isnan(auc) else "-"
        print(f"{kind:<6} {stats['accuracy']['median']:>9.4f} "
              f"{stats['weighted_f1']['median']:>12.4f} {auc_s:>7}")


def _print_confusion(cm: np.ndarray) -> None:
    labels = [c.label for c in AbsenteeismClass]
    print("true\\pred " + " ".join(f"{l:>6}" for l in labels))
    for i, l in enumerate(labels):
        print(f"{l:<9} " + " ".join(f"{int(cm[i, j]):>6}" for j in range(len(labels))))


def _cmd_train(args) -> int:
    config = _load_config(args)
    if not args.select_best:
        config = replace(config, models=(args.kind,))
    progress = None if args.quiet else lambda line: print(line)
    result = run_benchmark(config, progress=progress)

    selection = None
    if args.select_best:
        selection = select_best(result)
        kind = selection.kind
        _say(args, f"selected {kind}: {selection.reason}")
    else:
        kind = args.kind
    if kind not in result.fitted:
        raise ValueError(f"model {kind!r} failed to train; see the manifest")

    manifest = manifest_dict(result, selection)
    manifest_bytes = canonical_json(manifest).encode("ascii")
    digest = sha256_hex(manifest_bytes)

    mask = np.ones(result.schema.width, dtype=bool)
    bundle = bundle_from_model(kind, result.fitted[kind], result.schema,
                               result.rep0_scaler, mask, manifest_digest=digest)
    out = Path(args.out)
    n_bytes = save_bundle(bundle, out)
    sidecar = out.with_name(out.name + ".manifest.json")
    sidecar.write_bytes(manifest_bytes)

    if not args.quiet:
        _print_table(aggregate_metrics(result))
    _say(args, f"saved {out} ({n_bytes} bytes, sha256 {bundle.checksum})")
    _say(args, f"manifest {sidecar} (sha256 {digest})")
    return 0


def _require(args, flag: str) -> str:
    value = getattr(args, flag.strip("-").replace("-", "_"))
    if value is None:
        raise ValueError(f"{flag} is required for this command")
    return value


def _cmd_evaluate(args) -> int:
    bundle = load_bundle(_require(args, "--model"))
    records = to_hire_time(parse_dataset(_require(args, "--data")))
    enc = encode(records, bundle.schema)
    Xs = apply_scaler(enc.X, bundle.scaler)
    model = model_from_bundle(bundle)
    labels, scores = predict_kind(bundle.kind, model, Xs)
    report = evaluate_predictions(enc.y, labels, scores)
    _print_confusion(report.confusion)
    print(f"accuracy           {report.accuracy:.4f}")
    print(f"weighted precision {report.weighted_precision:.4f}")
    print(f"weighted recall    {report.weighted_recall:.4f}")
    print(f"weighted f1        {report.weighted_f1:.4f}")
    if report.auc is not None:
        print(f"ovo auc            {report.auc:.4f}")
    per = ", ".join(
        f"{c.label}={report.recall[c]:.2f}" for c in AbsenteeismClass
        if not np.isnan(report.recall[c])
    )
    print(f"per-class recall   {per}")
    return 0


def _cmd_importance(args) -> int:
    records = to_hire_time(parse_dataset(_require(args, "--data")))
    seed = args.seed if args.seed is not None else ExperimentConfig().seed
    schema, importances = run_importance(records, n_trees=args.trees, seed=seed)
    order = np.argsort(-importances, kind="stable")
    print(f"{'rank':<5} {'attribute':<28} importance")
    for rank, j in enumerate(order, start=1):
        print(f"{rank:<5} {schema.columns[j].name:<28} {importances[j]:.4f}")
    return 0


def _cmd_predict(args) -> int:
    bundle = load_bundle(_require(args, "--model"))
    if args.input == "-":
        payload = json.load(sys.stdin)
    else:
        with open(args.input, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    clean, problem = validate_payload(bundle.schema, payload)
    if problem is not None:
        for f in problem["fields"]:
            print(f"error: {f['name']}: {f['message']}", file=sys.stderr)
        print(f"error: {problem['message']}", file=sys.stderr)
        return 1
    model = model_from_bundle(bundle)
    row = encode_input(bundle.schema, clean)
    row = apply_scaler(row[None, :], bundle.scaler)
    labels, scores = predict_kind(bundle.kind, model, row)
    cls = AbsenteeismClass(int(labels[0]))
    print(json.dumps({
        "predicted_class": cls.label,
        "class_index": int(cls),
        "score_kind": score_kind_name(bundle.kind),
        "scores": {c.label: float(scores[0, c]) for c in AbsenteeismClass},
    }, indent=2))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    bundle = load_bundle(_require(args, "--model"))
    manifest = None
    sidecar = Path(args.model + ".manifest.json")
    if sidecar.exists():
        manifest = json.loads(sidecar.read_text(encoding="utf-8"))
    app = create_app(bundle, manifest=manifest, static_dir=args.static_dir)
    _say(args, f"serving {bundle.kind} bundle on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port,
                log_level="warning" if args.quiet else "info")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "importance": _cmd_importance,
    "predict": _cmd_predict,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
