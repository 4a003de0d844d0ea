"""CLI for the embedding exporter.

Exit codes: 0 success, 2 for bad inputs/configuration, 1 for runtime
failures.
"""

from __future__ import annotations

import argparse
import sys

from .exporter import ExportJob, ExporterError, export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embexport",
        description="Export frozen-encoder CLS embeddings for a post corpus as an EMB1 store.",
    )
    parser.add_argument("--corpus", required=True, help="input TSV (id, text, labels)")
    parser.add_argument("--out", required=True, help="output EMB1 path")
    parser.add_argument("--model", default="bert-base-multilingual-uncased")
    parser.add_argument("--max-len", type=int, default=128)
    parser.add_argument("--pooling", choices=("cls", "pooler"), default="cls")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default="cpu")
    parser.add_argument(
        "--non-deterministic",
        action="store_true",
        help="allow multi-threaded kernels (faster, byte-instability across runs)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job_kwargs = dict(
        corpus_path=args.corpus,
        out_path=args.out,
        model_name=args.model,
        max_length=args.max_len,
        batch_size=args.batch_size,
        device=args.device,
        pooling=args.pooling,
        deterministic=not args.non_deterministic,
    )
    try:
        count = export_embeddings(ExportJob(**job_kwargs))
    except (ExporterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} embeddings to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
