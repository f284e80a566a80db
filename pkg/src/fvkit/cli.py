"""``fv`` command line: batch processing of recorded frame bundles.

Exit codes: 0 success, 1 input or validation error, 2 stage failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import calib_io as io
from .align import align_depth_to_color
from .core import Aabb3, BinaryMask, FormatError, FvError, UnsupportedError
from .metrics import MASK_METRICS, aggregate, mask_confusion, mask_union, match_detections, roc_auc
from .pipeline import PipelineConfig, PipelineResult, StageError, bench, run_pipeline
from .plots import plot_bench, plot_metrics
from .synth import Plane, ground_truth_aabb, make_bundle, visible_aabb

logger = logging.getLogger("fv")

EXIT_OK, EXIT_INPUT, EXIT_STAGE = 0, 1, 2


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def _write_csv(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else [])
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------- config


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="pipeline config (JSON)")
    p.add_argument("--voxel-size", type=float)
    p.add_argument("--k-neighbors", type=int)
    p.add_argument("--std-ratio", type=float)
    p.add_argument("--min-points", type=int)
    p.add_argument("--emit-raw-clouds", action="store_true", default=None)
    p.add_argument("--emit-wireframes", action="store_true", default=None)
    p.add_argument("--no-denoise", dest="denoise", action="store_false", default=None)
    p.add_argument("--no-downsample", dest="downsample", action="store_false", default=None)


def _config(args) -> PipelineConfig:
    cfg = io.load_config(args.config.read_bytes()) if args.config else PipelineConfig()
    return cfg.override(
        voxel_size=args.voxel_size,
        k_neighbors=args.k_neighbors,
        std_ratio=args.std_ratio,
        min_points=args.min_points,
        emit_raw_clouds=args.emit_raw_clouds,
        emit_wireframes=args.emit_wireframes,
        denoise=args.denoise,
        downsample=args.downsample,
    )


def _safe(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in label) or "object"


def _write_result(result: PipelineResult, out: Path, config: PipelineConfig, binary: bool) -> None:
    """Per-object PLY, fv-box/1 document, optional raw clouds and timings.

    Everything except ``timings.json`` is a pure function of the inputs.
    """
    out.mkdir(parents=True, exist_ok=True)
    for i, obj in enumerate(result.objects):
        (out / f"{i:03d}_{_safe(obj.label)}.ply").write_bytes(io.write_ply(obj.cloud, binary))
    if result.raw_clouds is not None:
        for i, cloud in enumerate(result.raw_clouds):
            (out / f"raw_{i:03d}.ply").write_bytes(io.write_ply(cloud, binary))
    (out / "boxes.json").write_text(io.write_boxes(result.objects, wireframes=config.emit_wireframes))
    _write_json(out / "timings.json", {
        "full_view_points": result.full_view_points,
        "retained_points": result.retained_points,
        "stages": [{"stage": t.stage, "ms": t.ms, "points": t.points} for t in result.timings],
        "warnings": result.warnings,
    })


# ---------------------------------------------------------------- commands


def cmd_align(args) -> int:
    calib = io.load_calibration(args.calib.read_bytes())
    depth = io.load_depth_png(args.depth.read_bytes(), calib.depth_scale)
    aligned = align_depth_to_color(depth, calib.depth, calib.color, calib.extrinsics)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_bytes(io.save_depth_png(aligned))
    print(f"aligned {int(depth.valid.sum())} -> {int(aligned.valid.sum())} valid pixels: {args.out}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    config = _config(args)
    bundle = io.load_bundle(args.bundle)
    result = run_pipeline(bundle, config)
    _write_result(result, args.out_dir, config, args.binary_ply)
    print(f"{len(result.objects)} objects, {result.retained_points}/{result.full_view_points} points: {args.out_dir}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = _config(args)
    bundles = io.list_bundles(args.input)
    if not bundles:
        raise FormatError(f"no frame bundles under {args.input}")
    summary = []
    for path in bundles:
        result = run_pipeline(io.load_bundle(path), config)
        name = path.name if path != args.input else "frame"
        _write_result(result, args.out / name, config, args.binary_ply)
        summary.append({
            "bundle": name,
            "objects": len(result.objects),
            "full_view_points": result.full_view_points,
            "retained_points": result.retained_points,
            "retained_fraction": (result.retained_points / result.full_view_points
                                  if result.full_view_points else 0.0),
        })
        print(f"{name}: {len(result.objects)} objects, {result.retained_points}/{result.full_view_points} points")
    _write_json(args.out / "summary.json", {"config": config.to_dict(), "bundles": summary})
    return EXIT_OK


def _box_doc(items: list[tuple[dict, Aabb3]]) -> dict:
    return {
        "schema": io.BOX_SCHEMA,
        "objects": [
            {"label": t["label"], "class_id": t["class_id"], "min": b.min.tolist(), "max": b.max.tolist(),
             "point_count": t["pixels"]}
            for t, b in items
        ],
    }


def cmd_synth(args) -> int:
    calib = io.load_calibration(args.calib.read_bytes())
    scene = io.load_scene(args.scene.read_bytes())
    noise = io.load_noise(args.noise.read_bytes()) if args.noise else None
    bundle, truth = make_bundle(scene, calib.color, calib.depth, calib.extrinsics, noise, calib.depth_scale)
    io.save_bundle(bundle, args.out)
    analytic, visible = [], []
    for t in truth:
        prim = scene.primitives[t["index"]]
        if not isinstance(prim.shape, Plane):
            analytic.append((t, ground_truth_aabb(prim, calib.extrinsics)))
        try:
            visible.append((t, visible_aabb(scene, t["index"], calib.depth, calib.depth_scale, calib.extrinsics)))
        except UnsupportedError:
            logger.warning("object %d (%s) not visible from the depth camera", t["index"], t["label"])
    # both documents are in the color camera frame, like reconstructed boxes
    _write_json(args.out / "gt_boxes.json", _box_doc(analytic))
    _write_json(args.out / "gt_visible_boxes.json", _box_doc(visible))
    print(f"{len(bundle.detections)} objects rendered: {args.out}")
    return EXIT_OK


def _image_entries(root: Path) -> dict[str, Path]:
    """Image name -> ``<name>.png`` file or ``<name>/`` directory of instance masks."""
    if not root.is_dir():
        raise FormatError(f"{root} is not a directory")
    out = {}
    for p in sorted(root.iterdir()):
        if p.is_file() and p.suffix == ".png":
            out[p.stem] = p
        elif p.is_dir():
            out[p.name] = p
    return out


def _load_semantic(path: Optional[Path], shape: Optional[tuple]) -> np.ndarray:
    """Binary mask for one image; instance directories are merged by union."""
    if path is None:
        return np.zeros(shape, dtype=bool)
    if path.is_dir():
        files = sorted(path.glob("*.png"))
        if not files:
            if shape is None:
                raise FormatError(f"{path}: no instance masks")
            return np.zeros(shape, dtype=bool)
        return mask_union(io.load_mask(f.read_bytes()) for f in files)
    return io.load_mask(path.read_bytes()).bits


def cmd_metrics(args) -> int:
    gt_entries = _image_entries(args.gt)
    if not gt_entries:
        raise FormatError(f"no ground-truth masks under {args.gt}")
    pred_entries = _image_entries(args.pred)
    per_image = []
    for name, gt_path in gt_entries.items():
        gt = _load_semantic(gt_path, None)
        if name not in pred_entries:
            logger.warning("no prediction for %s; scored as empty", name)
        pred = _load_semantic(pred_entries.get(name), gt.shape)
        c = mask_confusion(BinaryMask(pred), BinaryMask(gt))
        row = {"image": name, "tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn}
        row.update({k: f(c) for k, f in MASK_METRICS.items()})
        soft_path = args.soft / f"{name}.png" if args.soft else None
        if soft_path is not None and soft_path.exists() and 0 < gt.sum() < gt.size:
            row["auc"] = roc_auc(io.load_soft_mask(soft_path.read_bytes()), gt)
        else:
            row["auc"] = None
        per_image.append(row)

    names = list(MASK_METRICS) + ["auc"]
    summary = {}
    for k in names:
        vals = [r[k] for r in per_image if r[k] is not None]
        if vals:
            summary[k] = aggregate(vals)
    doc = {
        "schema": "fv-metrics/1",
        "images": per_image,
        "summary": {k: s.__dict__ for k, s in summary.items()},
        "auc": "computed from soft masks" if "auc" in summary else "n/a (no soft masks given)",
    }
    if args.pred_det and args.gt_det:
        results, n_gt = [], 0
        for name in gt_entries:
            gp, pp = args.gt_det / f"{name}.json", args.pred_det / f"{name}.json"
            img_gts = io.load_detections(gp.read_bytes()) if gp.exists() else []
            img_preds = io.load_detections(pp.read_bytes()) if pp.exists() else []
            # match within each image, then pool
            res = match_detections(img_preds, img_gts, args.iou_threshold)
            results.append(res)
            n_gt += len(img_gts)
        n_pred = sum(r.predictions for r in results)
        n_tp = sum(r.true_positives for r in results)
        doc["detection"] = {
            "iou_threshold": args.iou_threshold,
            "predictions": n_pred,
            "true_positives": n_tp,
            "precision": n_tp / n_pred if n_pred else (1.0 if n_gt == 0 else 0.0),
        }

    report = args.report
    _write_json(report, doc)
    _write_csv(report.with_suffix(".csv"), [
        {"metric": k, "mean": s.mean, "std": s.std, "median": s.median, "mad": s.mad}
        for k, s in summary.items()
    ])
    plot_metrics(summary, report.with_suffix(".png"))
    for k, s in summary.items():
        print(f"{k:15s} mean {s.mean:.4f}  std {s.std:.4f}  median {s.median:.4f}  mad {s.mad:.4f}")
    if "auc" not in summary:
        print("auc             n/a (no soft masks given)")
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _config(args)
    report = bench(io.load_bundle(args.bundle), config, args.reps)
    _write_json(args.report, report.to_dict())
    _write_csv(args.report.with_suffix(".csv"), report.rows())
    plot_bench(report, args.report.with_suffix(".png"))
    for row in report.rows():
        print(f"{row['process']:16s} {row['ms']!s:>10} ms {row['fps']!s:>10} fps {row['points']!s:>8} pts")
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fv", description="RGB-D object reconstruction from recorded frame bundles")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align a depth image to the color camera")
    p.add_argument("--calib", type=Path, required=True)
    p.add_argument("--depth", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("reconstruct", help="object clouds and boxes for one bundle")
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--binary-ply", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("pipeline", help="process every bundle in a directory")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--binary-ply", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", help="render a synthetic bundle with ground truth")
    p.add_argument("--scene", type=Path, required=True)
    p.add_argument("--calib", type=Path, required=True)
    p.add_argument("--noise", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("metrics", help="segmentation metrics over a directory of masks")
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--soft", type=Path, help="8-bit score maps named like the ground truth")
    p.add_argument("--pred-det", type=Path, help="predicted fv-det/1 files, <name>.json")
    p.add_argument("--gt-det", type=Path, help="ground-truth fv-det/1 files, <name>.json")
    p.add_argument("--iou-threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bench", help="per-stage timing table")
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--report", type=Path, required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"fv: error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (FvError, OSError) as exc:
        print(f"fv: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
