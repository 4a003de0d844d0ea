"""Command-line interface.

Exit codes: 0 success, 2 for invalid inputs or configuration, 1 for
runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_io
from . import embeddings, ensemble, gbdt, metrics, mlp, pipeline
from .corpus import HOSTILE_NAMES
from .errors import InputError


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None


def _cmd_stats(args) -> int:
    corpus = corpus_io.parse_corpus(args.corpus, args.split)
    stats = corpus_io.split_stats(corpus)
    print(json.dumps(stats.to_dict(), sort_keys=True))
    return 0


def _train_config_from_args(args) -> mlp.TrainConfig:
    params = _load_json(args.config) if args.config else {}
    if args.seed is not None:
        params["seed"] = args.seed
    try:
        return mlp.TrainConfig(**params)
    except TypeError as exc:
        raise InputError(f"bad training config: {exc}") from None


def _cmd_train_mlp(args) -> int:
    corpus = corpus_io.parse_corpus(args.train_corpus, "train")
    store = embeddings.read_store(args.train_store)
    data = embeddings.align(corpus, store)
    if args.head == "fine":
        mask = data.Y[:, 1:].any(axis=1)
        data = embeddings.AlignedDataset(
            X=data.X[mask], Y=data.Y[mask], ids=tuple(np.array(data.ids)[mask])
        )
    val = None
    if args.val_corpus:
        val_corpus = corpus_io.parse_corpus(args.val_corpus, "validation")
        val = embeddings.align(val_corpus, embeddings.read_store(args.val_store))
    cfg = _train_config_from_args(args)
    model, history = mlp.train_mlp(data, val, args.head, cfg)
    mlp.save_model(model, args.out, train_config=cfg)
    summary = {"out": args.out, "train_loss": list(history.train_loss)}
    if history.val_weighted_f1 is not None:
        summary["val_weighted_f1"] = list(history.val_weighted_f1)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_extract_finetuned(args) -> int:
    model, _ = mlp.load_model(args.model)
    store = embeddings.read_store(args.store)
    hidden = mlp.extract_finetuned(model, store.vectors.astype(np.float64))
    out_store = embeddings.EmbeddingStore(model.hidden_dim, store.ids, hidden.astype(np.float32))
    embeddings.write_store(out_store, args.out)
    print(json.dumps({"out": args.out, "dim": model.hidden_dim, "count": len(out_store)}))
    return 0


def _cmd_train_gbdt(args) -> int:
    corpus = corpus_io.parse_corpus(args.corpus, "train")
    store = embeddings.read_store(args.features)
    data = embeddings.align(corpus, store)
    params = _load_json(args.config) if args.config else {}
    if args.seed is not None:
        params["seed"] = args.seed
    try:
        cfg = gbdt.GbdtConfig(**params)
    except TypeError as exc:
        raise InputError(f"bad gbdt config: {exc}") from None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if args.task == "coarse":
        y = data.Y[:, 1:].any(axis=1).astype(np.float64)
        booster = gbdt.fit_booster(data.X, y, cfg)
        path = out_dir / "gbdt_coarse.json"
        gbdt.save_booster(booster, path)
        written.append(str(path))
    else:
        mask = data.Y[:, 1:].any(axis=1)
        fine_set = gbdt.fit_one_vs_rest(data.X[mask], data.Y[mask][:, 1:5], cfg)
        for label, booster in zip(HOSTILE_NAMES, fine_set.boosters):
            path = out_dir / f"gbdt_{label}.json"
            gbdt.save_booster(booster, path)
            written.append(str(path))
    print(json.dumps({"written": written}))
    return 0


def _cmd_predict(args) -> int:
    corpus = corpus_io.parse_corpus(args.corpus, args.split)
    models_dir = Path(args.models)
    if args.kind == "mlp":
        if not args.store:
            raise InputError("predict --kind mlp requires --store")
        coarse_model, _ = mlp.load_model(models_dir / "mlp_coarse.ckpt")
        fine_model, _ = mlp.load_model(models_dir / "mlp_fine.ckpt")
        data = embeddings.align(corpus, embeddings.read_store(args.store))
        pc = mlp.predict(coarse_model, data.X)
        pf = mlp.predict(fine_model, data.X)
        nonhostile_p, fine_p = pc[:, 0], pf
    else:
        if not (args.coarse_features and args.fine_features):
            raise InputError("predict --kind gbdt requires --coarse-features and --fine-features")
        coarse_booster = gbdt.load_booster(models_dir / "gbdt_coarse.json")
        fine_boosters = [gbdt.load_booster(models_dir / f"gbdt_{label}.json") for label in HOSTILE_NAMES]
        coarse_data = embeddings.align(corpus, embeddings.read_store(args.coarse_features))
        fine_data = embeddings.align(corpus, embeddings.read_store(args.fine_features))
        nonhostile_p = 1.0 - gbdt.predict_proba(coarse_booster, coarse_data.X)
        fine_p = np.column_stack([gbdt.predict_proba(b, fine_data.X) for b in fine_boosters])
    bits, scores = pipeline.rows_from_probs(nonhostile_p, fine_p, not args.no_cascade)
    pipeline.write_predictions(args.out, corpus.ids(), bits, scores)
    print(json.dumps({"out": args.out, "rows": len(corpus)}))
    return 0


def _cmd_ensemble(args) -> int:
    if len(args.pred) < 2:
        raise InputError("ensemble needs at least two prediction files")
    raw = _load_json(args.weights)
    ff1 = raw["ff1"] if isinstance(raw, dict) else raw
    if not isinstance(ff1, list):
        raise InputError("weights file must be a JSON array or an object with an 'ff1' array")
    weights = ensemble.EnsembleWeights(ff1=tuple(float(w) for w in ff1))
    outputs = []
    ids0 = None
    for path in args.pred:
        ids, bits, _ = pipeline.read_predictions(path)
        if ids0 is None:
            ids0 = ids
        elif ids != ids0:
            raise InputError(f"{path}: prediction ids do not match {args.pred[0]}")
        outputs.append(ensemble.ModelOutputs(model_id=str(path), bits=bits, strict=not args.no_cascade))
    result = ensemble.combine(outputs, weights, cascade=not args.no_cascade)
    pipeline.write_predictions(args.out, ids0, result.bits, result.scores)
    print(json.dumps({"out": args.out, "rows": len(ids0)}))
    return 0


def _cmd_evaluate(args) -> int:
    gold_corpus = corpus_io.parse_corpus(args.gold, args.split)
    ids, bits, _ = pipeline.read_predictions(args.pred)
    index = {post_id: i for i, post_id in enumerate(ids)}
    missing = [p for p in gold_corpus.ids() if p not in index]
    if missing:
        raise InputError(f"predictions missing {len(missing)} gold ids (first: {missing[0]!r})")
    order = [index[p] for p in gold_corpus.ids()]
    gold = np.array(gold_corpus.label_rows(), dtype=np.int64)
    report = metrics.evaluate(bits[order], gold, fine_hostile_only=args.fine_hostile_only)
    print(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    print(metrics.report_table([(args.name, report)]))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
    return 0


def _experiment_config(args, submission: str | None = None) -> pipeline.ExperimentConfig:
    cfg = pipeline.ExperimentConfig.from_json(args.config)
    if submission is not None:
        cfg.submission = submission
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    if getattr(args, "no_cascade_build", False):
        cfg.auto_deps = False
    return cfg


def _cmd_run(args) -> int:
    name = args.submission if args.submission.startswith("sub") else f"sub{args.submission}"
    if name not in pipeline.SUBMISSIONS:
        raise InputError(f"unknown submission {args.submission!r}")
    artifacts = pipeline.run_submission(_experiment_config(args, submission=name))
    headline = {
        split: {
            "coarse_weighted_f1": report.coarse_weighted_f1,
            "fine_weighted_f1": report.fine_weighted_f1,
        }
        for split, report in artifacts.reports.items()
    }
    print(json.dumps({"out_dir": artifacts.out_dir, "scores": headline}, sort_keys=True, indent=2))
    return 0


def _cmd_reproduce_all(args) -> int:
    table, _ = pipeline.reproduce_all(_experiment_config(args))
    print(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hostility",
        description="Two-stage hostility detection pipeline for short social-media posts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="print per-class counts of a corpus split as JSON")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default="train", choices=corpus_io.SPLITS)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("train-mlp", help="train the coarse or fine network on raw embeddings")
    p.add_argument("--train-corpus", required=True)
    p.add_argument("--train-store", required=True)
    p.add_argument("--val-corpus")
    p.add_argument("--val-store")
    p.add_argument("--head", required=True, choices=("coarse", "fine"))
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON file with training-config fields")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_train_mlp)

    p = sub.add_parser("extract-finetuned", help="write hidden activations of a trained network as a store")
    p.add_argument("--model", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract_finetuned)

    p = sub.add_parser("train-gbdt", help="train boosted trees on a feature store")
    p.add_argument("--corpus", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--task", required=True, choices=("coarse", "fine"))
    p.add_argument("--out", required=True, help="output directory for booster JSON files")
    p.add_argument("--config", help="JSON file with gbdt-config fields")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_train_gbdt)

    p = sub.add_parser("predict", help="write multi-hot predictions for a corpus")
    p.add_argument("--kind", required=True, choices=("mlp", "gbdt"))
    p.add_argument("--models", required=True, help="directory with model checkpoints")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default="test", choices=corpus_io.SPLITS)
    p.add_argument("--store", help="raw embedding store (mlp kind)")
    p.add_argument("--coarse-features", help="feature store for the coarse booster (gbdt kind)")
    p.add_argument("--fine-features", help="feature store for the fine boosters (gbdt kind)")
    p.add_argument("--out", required=True)
    p.add_argument("--no-cascade", action="store_true")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("ensemble", help="combine prediction files with F1 weights")
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--weights", required=True, help="JSON array of per-model weights")
    p.add_argument("--out", required=True)
    p.add_argument("--no-cascade", action="store_true")
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("evaluate", help="score predictions against a gold corpus")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--split", default="test", choices=corpus_io.SPLITS)
    p.add_argument("--name", default="model")
    p.add_argument("--out")
    p.add_argument("--fine-hostile-only", action="store_true")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="run one submission end to end")
    p.add_argument("--submission", required=True, help="1-5 or sub1-sub5")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--no-cascade-build", action="store_true", help="fail instead of building dependency models")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("reproduce-all", help="run all five submissions and compare with reported scores")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_reproduce_all)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
