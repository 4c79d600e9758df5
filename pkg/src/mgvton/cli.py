"""Command-line entry point: gen-data, train, try-on, eval and grid."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import shutil
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from . import data_model as dm
from .checkpoint import CheckpointError
from .synthetic import load_split, load_triplet, make_dataset, manifest_resolution, split_counts
from .training import (STAGES, NonFiniteLossError, Pipeline, PrerequisiteError, TrainConfig, read_config_file,
                       run_pipeline, train_stage, triplet_request, write_metrics)

log = logging.getLogger("mgvton")

# fixed colors for the 20 parsing labels; reserved labels get distinct muted tones
PARSING_PALETTE = np.array([
    [0, 0, 0], [128, 0, 0], [255, 190, 150], [0, 128, 255], [0, 0, 128],
    [0, 200, 0], [0, 120, 0], [255, 200, 0], [180, 120, 0], [255, 120, 200],
    [128, 128, 0], [0, 128, 128], [128, 0, 128], [64, 64, 64], [192, 192, 192],
    [64, 0, 0], [0, 64, 0], [0, 0, 64], [64, 64, 0], [0, 64, 64],
], dtype=np.uint8)

# OpenPose limb pairs used to draw target poses
LIMBS = [(1, 2), (2, 3), (3, 4), (1, 5), (5, 6), (6, 7), (1, 8), (8, 9), (9, 10), (1, 11), (11, 12),
         (12, 13), (1, 0), (0, 14), (14, 16), (0, 15), (15, 17)]

GRID_LABELS = ("person + pose", "clothes", "parsing", "warped clothes", "coarse", "mask", "final")
LABEL_STRIP = 14


class UsageError(ValueError):
    pass


def colorize_parsing(parsing: np.ndarray) -> np.ndarray:
    return PARSING_PALETTE[np.asarray(parsing, dtype=np.intp)].astype(np.float64) / 255.0


def _scale(h: int) -> int:
    return max(1, 192 // h)


def _panel(image: np.ndarray, scale: int) -> Image.Image:
    if image.ndim == 2:
        image = np.repeat(image[..., None], 3, axis=2)
    im = Image.fromarray(dm.to_uint8(image), mode="RGB")
    return im.resize((im.width * scale, im.height * scale), Image.NEAREST)


def draw_pose(panel: Image.Image, keypoints: np.ndarray, scale: int) -> Image.Image:
    panel = panel.copy()
    draw = ImageDraw.Draw(panel)
    pt = lambda k: (keypoints[k, 0] * scale + scale / 2, keypoints[k, 1] * scale + scale / 2)  # noqa: E731
    for a, b in LIMBS:
        if keypoints[a, 2] > 0 and keypoints[b, 2] > 0:
            draw.line([pt(a), pt(b)], fill=(255, 0, 0), width=max(1, scale // 2))
    r = max(1, scale // 2)
    for k in range(len(keypoints)):
        if keypoints[k, 2] > 0:
            x, y = pt(k)
            draw.ellipse([x - r, y - r, x + r, y + r], fill=(255, 255, 0))
    return panel


def labeled_row(panels: list[Image.Image], labels) -> Image.Image:
    """Panels side by side, each under a text label."""
    w, h = panels[0].size
    out = Image.new("RGB", (w * len(panels), h + LABEL_STRIP), (255, 255, 255))
    draw = ImageDraw.Draw(out)
    for i, (p, text) in enumerate(zip(panels, labels)):
        out.paste(p, (i * w, LABEL_STRIP))
        draw.text((i * w + 2, 1), text, fill=(0, 0, 0))
    return out


def try_on_grid(person, clothes, target_keypoints, result: dict) -> Image.Image:
    s = _scale(person.shape[0])
    panels = [draw_pose(_panel(person, s), target_keypoints, s), _panel(clothes, s),
              _panel(colorize_parsing(result["parsing"]), s), _panel(result["warped_clothes"], s),
              _panel(result["coarse"], s), _panel(result["mask"], s), _panel(result["final"], s)]
    return labeled_row(panels, GRID_LABELS)


# ---------------------------------------------------------------------------
# subcommands

def _resolution(text):
    try:
        h, w = str(text).lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"resolution must look like 64x48, got {text!r}")


def cmd_gen_data(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    out = Path(args.out)
    if out.exists() and any(out.iterdir()):
        if not args.overwrite:
            raise UsageError(f"{out} is not empty; pass --overwrite to replace it")
        if not (out / "manifest.tsv").exists():
            raise UsageError(f"{out} does not look like a dataset tree; refusing to overwrite it")
        shutil.rmtree(out)
    out.mkdir(parents=True, exist_ok=True)
    make_dataset(args.count, args.seed, args.resolution, out)
    n_train, n_test = split_counts(args.count)
    print(f"wrote {args.count} triplets to {out} (train {n_train}, test {n_test})")
    return 0


def _config_from_args(args) -> TrainConfig:
    values = read_config_file(args.config) if args.config else {}
    for f in fields(TrainConfig):
        v = getattr(args, f"cfg_{f.name}", None)
        if v is not None:
            values[f.name] = v
    if args.seed is not None:
        values["seed"] = str(args.seed)
    if args.resolution is not None:
        values["resolution"] = f"{args.resolution[0]}x{args.resolution[1]}"
    if args.dataset:
        values["dataset"] = args.dataset
    values.setdefault("stage", "parsing")
    return TrainConfig.from_strings(values)


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    if not cfg.dataset:
        raise UsageError("a dataset is required (--dataset or dataset= in the config)")
    res = manifest_resolution(cfg.dataset)
    if "resolution" not in (read_config_file(args.config) if args.config else {}) and args.resolution is None:
        cfg = dataclasses.replace(cfg, resolution=f"{res[0]}x{res[1]}")
    elif tuple(res) != cfg.shape:
        raise UsageError(f"dataset resolution {res[0]}x{res[1]} differs from --resolution {cfg.resolution}")
    triplets = load_split(cfg.dataset, "train", cfg.n_train or None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stages = STAGES if args.stage == "all" else (args.stage,)
    for stage in stages:
        stage_cfg = dataclasses.replace(cfg, stage=stage)
        result = train_stage(stage_cfg, triplets, out, dump_dir=out)
        write_metrics(out / f"{stage}_metrics.tsv", result.metrics)
        last = {k: v for s, k, v in result.metrics if s == result.checkpoint.step}
        summary = " ".join(f"{k}={v:.4g}" for k, v in last.items())
        print(f"{stage}: {result.checkpoint.step} steps {summary}".rstrip())
    return 0


def _clothes_dir(args) -> Path:
    p = Path(args.clothes)
    if p.is_dir():
        return p
    if args.dataset:
        for split in ("train", "test"):
            cand = Path(args.dataset) / split / args.clothes
            if cand.is_dir():
                return cand
    raise UsageError(f"clothes {args.clothes!r} not found (give a triplet directory or an id with --dataset)")


def cmd_try_on(args) -> int:
    pipe = Pipeline.load(args.checkpoints)
    person_dir = Path(args.person)
    person = dm.load_image(person_dir / "source.png")
    parsing = dm.load_parsing(person_dir / "source_parsing.png")
    cdir = _clothes_dir(args)
    clothes = dm.load_image(cdir / "clothes.png")
    cmask = (dm.load_mask(cdir / "clothes_mask.png") > 0.5).astype(np.float64)
    pose = dm.load_keypoints(args.target_pose)
    dm.validate_keypoints(pose, *parsing.shape)
    result = run_pipeline({"person_image": person, "person_parsing": parsing, "clothes_image": clothes,
                           "clothes_mask": cmask, "target_keypoints": pose}, pipe)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dm.save_image(out / "tryon.png", result["final"])
    try_on_grid(person, clothes, pose, result).save(out / "tryon_grid.png")
    print(f"wrote {out / 'tryon.png'} and {out / 'tryon_grid.png'}")
    return 0


def cmd_eval(args) -> int:
    from .evaluation import (evaluate_testset, load_classifier, save_classifier, train_toy_classifier,
                             write_report)
    triplets = load_split(args.dataset, "test", args.limit)
    if not triplets:
        raise UsageError(f"{args.dataset} has an empty test split")
    pipe = Pipeline.load(args.checkpoints, resolution=triplets[0].resolution)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cpath = Path(args.classifier) if args.classifier else out / "classifier.ckpt"
    if cpath.exists():
        classifier = load_classifier(cpath)
    else:
        classifier = train_toy_classifier(triplets[0].resolution, seed=args.seed if args.seed is not None else 0)
        save_classifier(cpath, classifier, triplets[0].resolution)
    rows, splits = evaluate_testset(pipe, triplets, classifier, args.variants, args.splits)
    write_report(out / "report.tsv", rows, splits)
    for r in rows:
        print("\t".join(r.cells()))
    return 0


def cmd_grid(args) -> int:
    pipe = Pipeline.load(args.checkpoints)
    triplets = load_split(args.dataset, args.split, args.count)
    if not triplets:
        raise UsageError(f"no triplets in split {args.split!r}")
    results = run_pipeline([triplet_request(t) for t in triplets], pipe)
    s = _scale(triplets[0].resolution[0])
    rows = []
    labels = ("source", "clothes", "target pose", "result", "ground truth")
    for t, r in zip(triplets, results):
        panels = [_panel(t.source_image, s), _panel(t.clothes_image, s),
                  draw_pose(_panel(np.ones_like(t.target_image), s), t.target_keypoints, s),
                  _panel(r["final"], s), _panel(t.target_image, s)]
        rows.append(labeled_row(panels, labels))
    grid = Image.new("RGB", (rows[0].width, sum(r.height for r in rows)), (255, 255, 255))
    for i, r in enumerate(rows):
        grid.paste(r, (0, i * r.height))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    grid.save(out)
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_config_overrides(p: argparse.ArgumentParser) -> None:
    """One flag per config key, spelled with underscores or dashes."""
    g = p.add_argument_group("config overrides")
    for f in fields(TrainConfig):
        if f.name in ("stage", "seed", "resolution", "dataset"):
            continue
        names = {f"--{f.name}", f"--{f.name.replace('_', '-')}"}
        g.add_argument(*sorted(names), dest=f"cfg_{f.name}", metavar=f.name.upper(), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgvton", description="Multi-pose virtual try-on on synthetic figures.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic triplet dataset")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=_resolution, default=(64, 48))
    p.add_argument("--out", required=True)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one stage or all stages in order")
    p.add_argument("--stage", choices=STAGES + ("all",), default="all")
    p.add_argument("--config")
    p.add_argument("--dataset")
    p.add_argument("--seed", type=int)
    p.add_argument("--resolution", type=_resolution)
    p.add_argument("--out", required=True, help="checkpoint directory")
    _add_config_overrides(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("try-on", help="dress a person in new clothes and a new pose")
    p.add_argument("--person", required=True, help="triplet directory providing source.png, parsing and pose")
    p.add_argument("--clothes", required=True, help="triplet directory or id (with --dataset)")
    p.add_argument("--target-pose", required=True, help="keypoint text file")
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--dataset")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_try_on)

    p = sub.add_parser("eval", help="SSIM / IS report on the test split")
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--splits", type=int, default=10)
    p.add_argument("--limit", type=int)
    p.add_argument("--classifier", help="toy classifier checkpoint (trained and cached when absent)")
    p.add_argument("--variants", nargs="+", default=["copy_source", "coarse", "full"],
                   choices=["copy_source", "coarse", "full"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="image grid of try-on results")
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--out", required=True, help="output PNG path")
    p.set_defaults(func=cmd_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (PrerequisiteError, CheckpointError, NonFiniteLossError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
