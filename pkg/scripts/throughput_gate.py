#!/usr/bin/env python3
"""Time a full-resolution evaluation run and report wall time plus peak memory.

Scene generation happens up front and is not part of the timed region; the
clock only covers evaluate() on the in-memory dataset. Peak RSS is read from
getrusage after the run, so it covers the whole process lifetime (generation
included), which makes the memory number conservative.

Prints a single JSON object to stdout.
"""

from __future__ import annotations

import argparse
import json
import resource
import sys
import time

from anomeval import EvalImage, SceneSpec, Track, TrackConfig, evaluate, generate_scene


def build_dataset(args) -> list[EvalImage]:
    images = []
    for i in range(args.images):
        spec = SceneSpec(
            width=args.width,
            height=args.height,
            component_count=6,
            size_range=(600, 1200),
            void_fraction=0.02,
            noise_level=0.3,
            false_alarm_rate=10.0,
            elevation=1.5,
            seed=args.seed + i,
        )
        labels, scores = generate_scene(spec)
        images.append(EvalImage(id=f"scene_{i:04d}", labels=labels, scores=scores))
    return images


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--images", type=int, default=100)
    ap.add_argument("--width", type=int, default=2048)
    ap.add_argument("--height", type=int, default=1024)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    images = build_dataset(args)
    config = TrackConfig(track=Track.ANOMALY)

    start = time.perf_counter()
    report = evaluate(images, config, dataset="throughput", method="synthetic")
    seconds = time.perf_counter() - start

    max_rss_bytes = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024
    out = {
        "images": args.images,
        "width": args.width,
        "height": args.height,
        "seconds": seconds,
        "max_rss_bytes": max_rss_bytes,
        "auprc": report.pixel.auprc,
        "fpr95": report.pixel.fpr95,
        "f1_bar": report.component.f1_bar,
    }
    json.dump(out, sys.stdout)
    print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
