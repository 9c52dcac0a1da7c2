"""Command-line front end.

Subcommands: evaluate (scores or masks to a results document), sweep
(component F1-bar versus threshold, CSV), stats (dataset properties), synth
(generate a synthetic dataset on disk), validate (check a submission against
a manifest without computing metrics).

Exit codes: 0 success, 1 validation or evaluation failure, 2 usage error.
Output files are written atomically; a failed run never leaves a partial
result behind. Relative --scores/--masks directories are resolved against
the working directory first and fall back to the manifest's directory.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import dataset as dataset_io
from . import report as report_mod
from .errors import EvalError
from .synth import SceneSpec, generate_scene
from .types import Track, TrackConfig


def _default_threads() -> int:
    env = os.environ.get("ANOMEVAL_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _write_output(data: bytes, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    path = Path(out)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _resolve_dir(arg: str, manifest_root: Path) -> Path:
    p = Path(arg)
    if p.is_absolute() or p.is_dir():
        return p
    fallback = manifest_root / arg
    return fallback if fallback.is_dir() else p


def _parse_taus(text: str | None):
    if text is None:
        return None
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise EvalError(f"cannot parse tau grid {text!r}") from None


def _build_config(args, manifest) -> TrackConfig:
    track = Track(args.track) if args.track else manifest.track
    mode = "binned" if args.bins is not None else "exact"
    kwargs = {
        "track": track,
        "min_component_size": args.min_size,
        "score_mode": mode,
        "score_bins": args.bins if args.bins is not None else 4096,
        "filtering": not args.no_filter,
    }
    taus = _parse_taus(args.taus)
    if taus is not None:
        kwargs["tau_grid"] = taus
    return TrackConfig(**kwargs)


def _add_common_eval_flags(p: argparse.ArgumentParser, masks_allowed: bool = True) -> None:
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    if masks_allowed:
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--scores", help="directory of score maps (<id>.f32 or <id>.png)")
        src.add_argument("--masks", help="directory of binary mask PNGs (<id>.png)")
    else:
        p.add_argument("--scores", required=True, help="directory of score maps")
    p.add_argument("--track", choices=[t.value for t in Track], help="override the manifest track")
    p.add_argument("--min-size", type=int, default=None, help="minimum predicted component size")
    p.add_argument("--no-filter", action="store_true", help="disable size filtering")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--bins", type=int, default=None, help="use binned score mode with this many bins")
    mode.add_argument("--exact", action="store_true", help="force exact score mode (the default)")
    p.add_argument("--taus", default=None, help="comma-separated quality-threshold grid")
    p.add_argument("--threads", type=int, default=_default_threads(), help="parallel image loads")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _cmd_evaluate(args) -> int:
    manifest = dataset_io.load_manifest(args.manifest)
    config = _build_config(args, manifest)
    scores_dir = _resolve_dir(args.scores, manifest.root) if args.scores else None
    masks_dir = _resolve_dir(args.masks, manifest.root) if args.masks else None
    images = dataset_io.load_eval_images(
        manifest, scores_dir=scores_dir, masks_dir=masks_dir, threads=args.threads
    )
    method = Path(args.scores or args.masks).name or "submission"
    rep = report_mod.evaluate(
        images, config, dataset=manifest.name, method=method, group_by=args.group_by
    )
    _write_output(report_mod.emit(rep, args.format), args.out)
    return 0


def _cmd_sweep(args) -> int:
    manifest = dataset_io.load_manifest(args.manifest)
    config = _build_config(args, manifest)
    scores_dir = _resolve_dir(args.scores, manifest.root)
    images = dataset_io.load_eval_images(manifest, scores_dir=scores_dir, threads=args.threads)
    deltas = None
    if args.deltas:
        deltas = [float(tok) for tok in args.deltas.split(",")]
    sweep = report_mod.delta_sweep(images, config, deltas=deltas, grid=args.grid)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["delta", "f1_bar", "is_delta_star"])
    for point in sweep.points:
        writer.writerow([point.delta, point.f1_bar, point.is_delta_star])
    _write_output(buf.getvalue().encode(), args.out)
    return 0


def _cmd_stats(args) -> int:
    manifest = dataset_io.load_manifest(args.manifest)
    stats = dataset_io.dataset_stats(manifest)
    doc = stats.to_dict()
    if args.format == "table":
        width = max(len(k) for k in doc)
        text = "".join(f"{k.ljust(width)}  {v}\n" for k, v in doc.items())
        _write_output(text.encode(), args.out)
    else:
        _write_output((json.dumps(doc, indent=2) + "\n").encode(), args.out)
    return 0


def _cmd_synth(args) -> int:
    lo_hi = tuple(int(tok) for tok in args.size_range.split(","))
    if len(lo_hi) != 2:
        raise EvalError("--size-range expects 'lo,hi'")
    outdir = Path(args.out)
    (outdir / "labels").mkdir(parents=True, exist_ok=True)
    (outdir / "scores").mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(args.images):
        spec = SceneSpec(
            width=args.width,
            height=args.height,
            component_count=args.components,
            size_range=lo_hi,
            void_fraction=args.void_fraction,
            hit_probability=args.hit_prob,
            noise_level=args.noise,
            false_alarm_rate=args.false_alarms,
            blur_sigma=args.blur,
            seed=args.seed + i,
        )
        labels, scores = generate_scene(spec)
        image_id = f"scene_{i:03d}"
        dataset_io.save_label_map(outdir / "labels" / f"{image_id}.png", labels)
        dataset_io.save_score_map(outdir / "scores" / f"{image_id}.f32", scores)
        entries.append(
            {
                "id": image_id,
                "label": f"labels/{image_id}.png",
                "width": args.width,
                "height": args.height,
                "tags": [],
            }
        )
    manifest = {"name": args.name, "track": args.track, "images": entries}
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {args.images} scenes under {outdir}")
    return 0


def _cmd_validate(args) -> int:
    manifest = dataset_io.load_manifest(args.manifest, check_files=False)
    scores_dir = _resolve_dir(args.scores, manifest.root) if args.scores else None
    masks_dir = _resolve_dir(args.masks, manifest.root) if args.masks else None
    problems = dataset_io.validate_inputs(manifest, scores_dir=scores_dir, masks_dir=masks_dir)
    for problem in problems:
        print(problem)
    if problems:
        print(f"{len(problems)} problem(s) found")
        return 1
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anomeval",
        description="Benchmark evaluation for pixel-wise anomaly / obstacle segmentation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score a submission and emit the results document")
    _add_common_eval_flags(p)
    p.add_argument("--group-by", default=None, help="also evaluate per tag kind")
    p.add_argument("--format", choices=["json", "table", "csv"], default="json")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="component F1-bar as a function of the pixel threshold")
    _add_common_eval_flags(p, masks_allowed=False)
    p.add_argument("--grid", type=int, default=report_mod.SWEEP_GRID, help="quantile count")
    p.add_argument("--deltas", default=None, help="comma-separated explicit thresholds")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("stats", help="dataset properties from the manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--format", choices=["json", "table"], default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("synth", help="generate a synthetic dataset on disk")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--name", default="synthetic")
    p.add_argument("--track", choices=[t.value for t in Track], default="anomaly")
    p.add_argument("--images", type=int, default=5)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--components", type=int, default=4)
    p.add_argument("--size-range", default="40,400")
    p.add_argument("--void-fraction", type=float, default=0.0)
    p.add_argument("--hit-prob", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--false-alarms", type=float, default=0.0)
    p.add_argument("--blur", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("validate", help="check submission files against a manifest")
    p.add_argument("--manifest", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scores")
    src.add_argument("--masks")
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
