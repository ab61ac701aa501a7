"""Command-line interface: propose, train, eval, spot, rotate-eval, synth."""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .evaluation import (
    DEFAULT_THRESHOLDS,
    load_dataset,
    read_image,
    recall_at,
    recall_curves,
    rotate_item,
    summary_stats,
    synth_corpus,
    write_corpus,
    write_curves_csv,
    write_summary_csv,
)
from .pipeline import PRESETS, TextProposer, count_hierarchies, read_proposals_csv, write_proposals_csv
from .ranking import StumpBoostRanker, TrainingSet, load_model, mine_training_samples, save_model
from .segmentation import MserParams
from .validation import DataError, InvalidInputError
from .wordspot import OracleRecognizer, spot_words, write_detections_csv

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting(2)."""

    def error(self, message):
        raise _UsageError(message)


def _parse_config_file(path: Path) -> dict:
    """Flat key=value pipeline config; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{ln_no}: expected key=value, got {raw.rstrip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key] = value
    return out


def _split_list(value: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _proposer_from_args(args, ranker) -> TextProposer:
    settings = dict(PRESETS["paper-default"])
    if getattr(args, "preset", None):
        if args.preset not in PRESETS:
            raise _UsageError(f"unknown preset {args.preset!r}; known: {sorted(PRESETS)}")
        settings = dict(PRESETS[args.preset])
    mser_kwargs: dict = {}
    max_proposals = None
    if getattr(args, "config", None):
        cfg = _parse_config_file(Path(args.config))
        for key, value in cfg.items():
            try:
                if key in ("levels", "channels", "cues"):
                    settings[key] = _split_list(value)
                elif key == "lambda":
                    settings["x_weight"] = float(value)
                elif key == "max_proposals":
                    max_proposals = int(value) if value else None
                elif key == "ranker_path":
                    pass  # handled by -m
                elif key.startswith("mser."):
                    field = key[5:]
                    if field == "polarity":
                        mser_kwargs[field] = value
                    elif field == "whole_tree":
                        mser_kwargs[field] = value.lower() in ("1", "true", "yes")
                    elif field in ("delta", "min_area"):
                        mser_kwargs[field] = int(value)
                    elif field in ("max_area_ratio", "max_variation"):
                        mser_kwargs[field] = float(value)
                    else:
                        raise DataError(f"{args.config}: unknown mser key {key!r}")
                else:
                    raise DataError(f"{args.config}: unknown config key {key!r}")
            except ValueError as exc:
                raise DataError(f"{args.config}: bad value for {key!r}: {value!r}") from exc
    if getattr(args, "max", None) is not None:
        max_proposals = args.max
    return TextProposer(
        levels=tuple(settings["levels"]),
        channels=tuple(settings["channels"]),
        cues=tuple(settings["cues"]),
        x_weight=float(settings["x_weight"]),
        mser_params=MserParams(**mser_kwargs) if mser_kwargs else None,
        ranker=ranker,
        max_proposals=max_proposals,
        n_jobs=getattr(args, "threads", 1),
    )


def _add_common(p, model_required: bool = True) -> None:
    p.add_argument("-c", "--config", help="flat key=value pipeline config file (default: preset)")
    p.add_argument("--preset", default="paper-default", help="named preset (default: paper-default)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for the pipeline (default: 1)")
    p.add_argument("-m", "--model", required=model_required, help="ranker model file")


def _build_parser() -> _Parser:
    parser = _Parser(prog="textprop", description="Text-specific word proposals")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propose", help="rank word proposals for one image")
    p.add_argument("-i", "--image", required=True, help="input image file")
    p.add_argument("-o", "--output", required=True, help="output proposals CSV")
    p.add_argument("--max", type=int, default=None, help="keep only the N best proposals (default: all)")
    _add_common(p)

    p = sub.add_parser("train", help="train the proposal ranker on a dataset")
    p.add_argument("-d", "--dataset", required=True, help="dataset dir (images/ + gt/)")
    p.add_argument("-o", "--output", required=True, help="output model file")
    p.add_argument("--rounds", type=int, default=200, help="boosting rounds (default: 200)")
    p.add_argument("--seed", type=int, default=13, help="seed for class balancing (default: 13)")
    p.add_argument("--format", choices=("plain", "icdar13"), default="plain", help="gt file format (default: plain)")
    p.add_argument("-c", "--config", help="flat key=value pipeline config file")
    p.add_argument(
        "--preset",
        default=None,
        help="pipeline preset for mining (default: full diversification)",
    )
    p.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")

    p = sub.add_parser("eval", help="recall curves and summary over a dataset")
    p.add_argument("-d", "--dataset", required=True, help="dataset dir (images/ + gt/)")
    p.add_argument("-o", "--outdir", required=True, help="output directory for curves.csv/summary.csv")
    p.add_argument("--format", choices=("plain", "icdar13"), default="plain", help="gt file format (default: plain)")
    p.add_argument("--thresholds", default=",".join(str(t) for t in DEFAULT_THRESHOLDS),
                   help="comma-separated IoU thresholds (default: 0.5..0.9)")
    p.add_argument("--max", type=int, default=None, help="cap proposals per image (default: all)")
    p.add_argument("--proposals-dir", default=None,
                   help="read per-image proposal CSVs from this dir instead of running the pipeline")
    _add_common(p, model_required=False)

    p = sub.add_parser("spot", help="spot words in one image with a recognizer oracle")
    p.add_argument("-i", "--image", required=True, help="input image file")
    p.add_argument("-o", "--output", default=None, help="detections CSV (default: stdout)")
    p.add_argument("--oracle-gt", required=True, help="gt file backing the mock recognizer")
    p.add_argument("--format", choices=("plain", "icdar13"), default="plain", help="gt file format (default: plain)")
    p.add_argument("--tau", type=float, default=0.5, help="recognition score threshold (default: 0.5)")
    p.add_argument("--budget", type=int, default=1000, help="recognizer evaluations (default: 1000)")
    p.add_argument("--nms-iou", type=float, default=0.5, help="final NMS IoU (default: 0.5)")
    _add_common(p)

    p = sub.add_parser("rotate-eval", help="recall on rotated copies of a dataset")
    p.add_argument("-d", "--dataset", required=True, help="dataset dir (images/ + gt/)")
    p.add_argument("-o", "--outdir", required=True, help="output directory for rotation.csv")
    p.add_argument("--degrees", default="15,30,45,60,75,90",
                   help="comma-separated angles (default: 15,30,45,60,75,90)")
    p.add_argument("--format", choices=("plain", "icdar13"), default="plain", help="gt file format (default: plain)")
    p.add_argument("--thresholds", default="0.5,0.7", help="IoU thresholds (default: 0.5,0.7)")
    _add_common(p, model_required=False)

    p = sub.add_parser("synth", help="generate a synthetic word dataset")
    p.add_argument("-o", "--outdir", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, required=True, help="corpus seed")
    p.add_argument("-n", "--images", type=int, default=50, help="image count (default: 50)")
    p.add_argument("--words-min", type=int, default=3, help="min words per image (default: 3)")
    p.add_argument("--words-max", type=int, default=8, help="max words per image (default: 8)")
    p.add_argument("--width", type=int, default=640, help="image width (default: 640)")
    p.add_argument("--height", type=int, default=480, help="image height (default: 480)")
    return parser


def _load_ranker(args):
    if getattr(args, "model", None):
        return load_model(args.model)
    return None


def _cmd_propose(args) -> int:
    proposer = _proposer_from_args(args, _load_ranker(args))
    image = read_image(args.image)
    write_proposals_csv(args.output, proposer.propose(image))
    return EXIT_OK


def _cmd_train(args) -> int:
    items = load_dataset(args.dataset, fmt=args.format)
    mining_args = argparse.Namespace(
        preset=args.preset, config=args.config, max=None, threads=args.threads
    )
    proposer = _proposer_from_args(mining_args, None)
    if args.preset is None and args.config is None:
        proposer.set_params(levels=("P0", "P1", "P2"), channels=("R", "G", "B", "I"))
    parts = []
    for item in items:
        gt_boxes = [b.bbox for b in item.gt.boxes]
        if not gt_boxes:
            continue
        hierarchies = proposer.build_hierarchies(read_image(item.image_path))
        parts.append(mine_training_samples(hierarchies, gt_boxes))
    samples = TrainingSet.concatenate(parts)
    if len(samples) == 0:
        raise DataError(f"{args.dataset}: mining produced no training samples")
    ranker = StumpBoostRanker(rounds=args.rounds, random_state=args.seed)
    ranker.fit(samples.features, samples.labels)
    save_model(ranker, args.output)
    n_pos = int(np.count_nonzero(samples.labels > 0))
    print(
        f"trained on {len(samples)} samples ({n_pos} positive) from {len(items)} images",
        file=sys.stderr,
    )
    return EXIT_OK


def _thresholds(args) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in _split_list(args.thresholds))
    except ValueError as exc:
        raise _UsageError(f"bad --thresholds value: {args.thresholds!r}") from exc
    if not vals:
        raise _UsageError("--thresholds must name at least one value")
    return vals


def _cmd_eval(args) -> int:
    items = load_dataset(args.dataset, fmt=args.format)
    thresholds = _thresholds(args)
    per_props, per_gts, runtimes = [], [], []
    if args.proposals_dir:
        for item in items:
            csv_path = Path(args.proposals_dir) / (item.image_path.stem + ".csv")
            props = read_proposals_csv(csv_path)
            if args.max is not None:
                props = props[: args.max]
            per_props.append(props)
            per_gts.append(item.gt)
            runtimes.append(0.0)
    else:
        proposer = _proposer_from_args(args, _load_ranker(args))
        for item in items:
            image = read_image(item.image_path)
            t0 = time.perf_counter()
            per_props.append(proposer.propose(image))
            runtimes.append(time.perf_counter() - t0)
            per_gts.append(item.gt)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_curves_csv(outdir / "curves.csv", recall_curves(per_props, per_gts, thresholds))
    write_summary_csv(
        outdir / "summary.csv", summary_stats(per_props, per_gts, thresholds, runtimes)
    )
    return EXIT_OK


def _cmd_spot(args) -> int:
    from .evaluation import load_ground_truth

    proposer = _proposer_from_args(args, _load_ranker(args))
    image = read_image(args.image)
    gt = load_ground_truth(args.oracle_gt, fmt=args.format)
    recognizer = OracleRecognizer(
        [b.bbox for b in gt.boxes], [b.transcription for b in gt.boxes]
    )
    hierarchies = proposer.build_hierarchies(image)
    detections = spot_words(
        image, hierarchies, recognizer, tau=args.tau, budget=args.budget, nms_iou=args.nms_iou
    )
    if args.output:
        write_detections_csv(args.output, detections)
    else:
        sys.stdout.write("x,y,width,height,score,transcription\n")
        for d in detections:
            x, y, w, h = d.bbox
            text = d.transcription.replace('"', '""')
            sys.stdout.write(f'{x},{y},{w},{h},{d.recognition_score!r},"{text}"\n')
    return EXIT_OK


def _cmd_rotate_eval(args) -> int:
    items = load_dataset(args.dataset, fmt=args.format)
    thresholds = _thresholds(args)
    try:
        degrees = tuple(float(v) for v in _split_list(args.degrees))
    except ValueError as exc:
        raise _UsageError(f"bad --degrees value: {args.degrees!r}") from exc
    if not degrees:
        raise _UsageError("--degrees must name at least one angle")
    proposer = _proposer_from_args(args, _load_ranker(args))
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for degree in degrees:
        per_props, per_gts = [], []
        for item in items:
            image, gt = rotate_item(read_image(item.image_path), item.gt, degree)
            per_props.append(proposer.propose(image))
            per_gts.append(gt)
        for thr in thresholds:
            vals = [
                r
                for props, gt in zip(per_props, per_gts)
                if (r := recall_at(props, gt, thr)) is not None
            ]
            rows.append((degree, thr, float(np.mean(vals)) if vals else 0.0))
    with open(outdir / "rotation.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("degrees,iou,recall\n")
        for degree, thr, rec in rows:
            fh.write(f"{degree:g},{thr!r},{rec!r}\n")
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.words_min < 1 or args.words_max < args.words_min:
        raise _UsageError("--words-min/--words-max must satisfy 1 <= min <= max")
    corpus = synth_corpus(
        seed=args.seed,
        n_images=args.images,
        words_per_image=(args.words_min, args.words_max),
        size=(args.width, args.height),
    )
    write_corpus(args.outdir, corpus)
    return EXIT_OK


_COMMANDS = {
    "propose": _cmd_propose,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "spot": _cmd_spot,
    "rotate-eval": _cmd_rotate_eval,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"textprop: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"textprop: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, OSError) as exc:
        print(f"textprop: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DataError,) as exc:
        print(f"textprop: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvalidInputError, ValueError) as exc:
        print(f"textprop: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
