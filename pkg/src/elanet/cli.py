"""Command-line entry point wiring the pipeline end to end.

One binary, eight subcommands: ela, scan, split, train, predict, evaluate,
roc, synth. Option precedence is CLI flag > config file (``--config``,
``key=value`` lines) > built-in default. All randomness flows from one
``--seed``. Outputs are written atomically (temp file + rename), so a
failing run never leaves partial files.

Exit codes: 0 success, 1 usage error, 2 data error, 3 diverged training.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from PIL import Image

from . import dataset, ela, metrics
from .errors import DivergedLoss, ElanetError
from .fileio import atomic_write_bytes, atomic_write_text
from .nn import TrainConfig, load_checkpoint, predict, save_checkpoint, train
from .nn.network import init_params
from .nn.training import TrainHistory

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3

DEFAULTS = {
    "quality": ela.DEFAULT_QUALITY,
    "size": "128x128",
    "seed": 42,
    "ratios": "0.8,0.2,0.0",
    "epochs": 20,
    "batch": 32,
    "lr": 1e-4,
    "threshold": 0.5,
    "beta": 1.0,
    "max_offset": 2,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; we reserve 2 for data
    # errors, so route usage problems through an exception instead.
    def error(self, message):
        raise UsageError(message)


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise UsageError(f"bad --size {text!r}, expected WxH") from exc


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"bad --ratios {text!r}, expected three comma-separated numbers")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _parse_rect(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise UsageError(f"bad --rect {text!r}, expected x,y,w,h")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def _load_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    settings = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"bad config line {line!r}, expected key=value")
        settings[key.strip()] = value.strip()
    return settings


def _resolve(args, key: str, cast=str):
    """CLI flag > config file > default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    config = _load_config(getattr(args, "config", None))
    if key in config:
        return cast(config[key])
    return DEFAULTS.get(key)


def build_parser() -> _Parser:
    parser = _Parser(prog="elanet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value settings file; CLI flags win")
        p.add_argument("--seed", type=int, help="64-bit seed for all randomness")
        p.add_argument("--out", required=True, help="output path")

    p = sub.add_parser("ela", help="write the enhanced ELA map of one image")
    p.add_argument("input", help="image file (JPEG/PNG/TIFF/BMP)")
    p.add_argument("--quality", type=int)
    common(p)

    p = sub.add_parser("scan", help="list labeled images under a corpus root")
    p.add_argument("root", help="corpus root with Au/ and Tp/ directories")
    common(p)

    p = sub.add_parser("split", help="build a split manifest from a scan listing")
    p.add_argument("records", help="scan listing CSV (path,label)")
    p.add_argument("--ratios", help="train,val,test fractions summing to 1")
    p.add_argument("--quality", type=int)
    p.add_argument("--size", help="target WxH for preprocessing")
    p.add_argument("--no-enhance", action="store_true", help="feed raw ELA maps, not rescaled")
    common(p)

    p = sub.add_parser("train", help="train the compact CNN on a manifest")
    p.add_argument("manifest")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--deterministic", action="store_true", help="force single-threaded run")
    p.add_argument("--history", required=True, help="per-epoch metrics CSV path")
    common(p)

    p = sub.add_parser("predict", help="write per-image probabilities for one split")
    p.add_argument("manifest")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=["train", "val", "test"], default="val")
    common(p)

    p = sub.add_parser("evaluate", help="metrics report from a predictions CSV")
    p.add_argument("preds")
    p.add_argument("--threshold", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--csv", help="also write the report as metric,value CSV")
    common(p)

    p = sub.add_parser("roc", help="ROC curve CSV from a predictions CSV")
    p.add_argument("preds")
    common(p)

    p = sub.add_parser("synth", help="synthesize a spliced image with a quality gap")
    p.add_argument("base", help="source image")
    p.add_argument("--rect", required=True, help="x,y,w,h of the pasted region")
    p.add_argument("--donor-quality", type=int, required=True)
    p.add_argument("--base-quality", type=int)
    p.add_argument("--max-offset", type=int)
    common(p)

    return parser


def _cmd_ela(args) -> int:
    quality = _resolve(args, "quality", int)
    img = ela.load_image(args.input)
    emap = ela.compute_ela(img, quality)
    ela.save_ela_png(emap, args.out, source=args.input)
    print(f"ela: wrote {args.out} quality={quality} max_error={emap.max_error}")
    return EXIT_OK


def _cmd_scan(args) -> int:
    records = dataset.scan_corpus(args.root)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["path", "label"])
    writer.writerows((p, int(lab)) for p, lab in records)
    atomic_write_text(args.out, buf.getvalue())
    n_tampered = sum(int(lab) for _, lab in records)
    print(f"scan: {len(records)} records ({len(records) - n_tampered} authentic, {n_tampered} tampered) -> {args.out}")
    return EXIT_OK


def _read_scan_csv(path: str) -> list[tuple[str, dataset.Label]]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0] != ["path", "label"]:
        raise ElanetError(f"{path}: expected scan listing with header 'path,label'")
    return [(r[0], dataset.Label(int(r[1]))) for r in rows[1:]]


def _cmd_split(args) -> int:
    records = _read_scan_csv(args.records)
    manifest = dataset.split_manifest(
        records,
        ratios=_parse_ratios(_resolve(args, "ratios")),
        seed=_resolve(args, "seed", int),
        quality=_resolve(args, "quality", int),
        target_size=_parse_size(_resolve(args, "size")),
        enhance=not args.no_enhance,
    )
    manifest.save(args.out)
    counts = {s.value: len(manifest.split_records(s)) for s in dataset.Split}
    print(f"split: {counts} seed={manifest.seed} -> {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    manifest = dataset.DatasetManifest.load(args.manifest)
    config = TrainConfig(
        epochs=_resolve(args, "epochs", int),
        batch_size=_resolve(args, "batch", int),
        learning_rate=_resolve(args, "lr", float),
        seed=_resolve(args, "seed", int),
        deterministic=bool(args.deterministic),
    )
    if config.epochs == 0:
        params = init_params(config.seed)
        history = TrainHistory()
    else:
        params, history = train(manifest, config)
    save_checkpoint(params, args.out)
    history.save(args.history)
    last = history.epochs[-1] if history.epochs else None
    summary = (
        f"val_acc={last.val_acc:.4f} val_loss={last.val_loss:.4f}" if last else "no epochs run"
    )
    print(f"train: {config.epochs} epochs seed={config.seed} {summary} -> {args.out}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    manifest = dataset.DatasetManifest.load(args.manifest)
    params = load_checkpoint(args.checkpoint)
    preds = predict(params, manifest, dataset.Split(args.split))
    preds.save(args.out)
    print(f"predict: {len(preds)} rows from split={args.split} -> {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    preds = metrics.PredictionSet.load(args.preds)
    report = metrics.evaluate(
        preds,
        threshold=_resolve(args, "threshold", float),
        beta=_resolve(args, "beta", float),
    )
    atomic_write_text(args.out, report.to_text())
    if args.csv:
        atomic_write_text(args.csv, report.to_csv())
    sys.stdout.write(report.to_text())
    print(f"evaluate: {len(preds)} rows -> {args.out}")
    return EXIT_OK


def _cmd_roc(args) -> int:
    preds = metrics.PredictionSet.load(args.preds)
    curve = metrics.roc_curve(preds)
    atomic_write_text(args.out, metrics.roc_to_csv(curve))
    print(f"roc: {len(curve.points)} points auc={metrics.auc(curve):.6f} -> {args.out}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    base = ela.load_image(args.base)
    spliced = dataset.synth_splice(
        base,
        rect=_parse_rect(args.rect),
        donor_quality=args.donor_quality,
        base_quality=_resolve(args, "base_quality", int) or _resolve(args, "quality", int),
        seed=_resolve(args, "seed", int),
        max_offset=_resolve(args, "max_offset", int),
    )
    buf = io.BytesIO()
    Image.fromarray(spliced, mode="RGB").save(buf, format="PNG")
    atomic_write_bytes(args.out, buf.getvalue())
    print(f"synth: rect={args.rect} donor_q={args.donor_quality} -> {args.out}")
    return EXIT_OK


_COMMANDS = {
    "ela": _cmd_ela,
    "scan": _cmd_scan,
    "split": _cmd_split,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "roc": _cmd_roc,
    "synth": _cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergedLoss as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ElanetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
