"""CLI: verify backbone parameter counts or run a fine-tune export.

    tl-harness counts --backbone vgg19
    tl-harness finetune --backbone vgg19 --manifest manifest.csv \
        --epochs 0 --history history.csv --predictions preds.csv
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backbones import BACKBONES, CountMismatch, build_model
from .finetune import fine_tune


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tl-harness", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("counts", help="build one or all backbones and verify totals")
    p.add_argument("--backbone", choices=sorted(BACKBONES), help="default: all five")
    p.add_argument("--pretrained", action="store_true", help="load imagenet weights")

    p = sub.add_parser("finetune", help="train (or just predict) and export CSVs")
    p.add_argument("--backbone", choices=sorted(BACKBONES), required=True)
    p.add_argument("--manifest", required=True, help="split manifest CSV from the primary pipeline")
    p.add_argument("--epochs", type=int, default=0)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--freeze-base", action="store_true")
    p.add_argument("--pretrained", action="store_true")
    p.add_argument("--split", default="val", choices=["train", "val", "test"])
    p.add_argument("--history", required=True, help="output history CSV")
    p.add_argument("--predictions", required=True, help="output predictions CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    weights = "imagenet" if getattr(args, "pretrained", False) else None
    try:
        if args.command == "counts":
            names = [args.backbone] if args.backbone else sorted(BACKBONES)
            for name in names:
                _, counts = build_model(BACKBONES[name], weights=weights)
                print(
                    f"{name}: total={counts.total:,} trainable={counts.trainable:,} "
                    f"non_trainable={counts.non_trainable:,} base={counts.base_total:,}"
                )
            return 0
        result = fine_tune(
            BACKBONES[args.backbone],
            args.manifest,
            epochs=args.epochs,
            batch_size=args.batch,
            learning_rate=args.lr,
            weights=weights,
            freeze_base=args.freeze_base,
            predict_split=args.split,
        )
        Path(args.history).write_text(result.history_csv, encoding="utf-8")
        Path(args.predictions).write_text(result.predictions_csv, encoding="utf-8")
        print(
            f"{args.backbone}: epochs={args.epochs} total_params={result.counts.total:,} "
            f"-> {args.history}, {args.predictions}"
        )
        return 0
    except CountMismatch as exc:
        print(f"count mismatch: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
