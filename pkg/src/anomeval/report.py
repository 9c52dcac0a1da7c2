"""Full-evaluation orchestration and result serialization.

`evaluate` runs the whole pipeline over in-memory images: pool pixels, build
the PR curve, derive the pixel metrics and the optimal threshold, generate
default masks at that threshold, then score components. Images are streamed
one at a time through the mask/component stage, so peak memory beyond the
pooled curve stays per-image. When submitted masks are evaluated instead of
scores, the pixel-level section is skipped and flagged.

Subset evaluation re-runs the complete pipeline per tag value, including the
threshold search; a subset is an independent benchmark run, not a slice of
the full one.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from . import maskgen, pixel
from .components import (
    ComponentReport,
    SizeBin,
    evaluate_components,
    size_stratified,
)
from .connectivity import extract_components
from .errors import (
    EmptySubset,
    NoGroundTruthComponents,
    NoNegatives,
    NoPositives,
    TooFewComponents,
)
from .pixel import PixelReport
from .types import EvalImage, TrackConfig

SCHEMA_VERSION = 1

#: Number of equal-count size intervals in the stratified breakdown.
SIZE_BINS = 8

#: Default number of score quantiles swept by delta_sweep.
SWEEP_GRID = 50


@dataclass(frozen=True)
class SweepPoint:
    delta: float
    f1_bar: float
    is_delta_star: bool = False


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    delta_star: float
    f1_bar_at_star: float


@dataclass(frozen=True)
class BenchmarkReport:
    """Every leaderboard column for one (dataset, method) pair."""

    dataset: str
    method: str
    config: TrackConfig
    pixel: PixelReport | None
    component: ComponentReport
    size_bins: tuple[SizeBin, ...] | None = None
    subsets: dict[str, "BenchmarkReport"] | None = None
    skipped_subsets: tuple[tuple[str, str], ...] = ()
    delta_sweep: SweepResult | None = None
    void_cleared: int = 0


def _component_stage(images, masks_iter, config: TrackConfig) -> ComponentReport:
    gt_sets = (extract_components(im.labels.anomaly_mask()) for im in images)
    pred_sets = (extract_components(m) for m in masks_iter)
    return evaluate_components(gt_sets, pred_sets, config, [im.id for im in images])


def evaluate(
    images,
    config: TrackConfig,
    dataset: str = "",
    method: str = "",
    group_by: str | None = None,
) -> BenchmarkReport:
    """Run the complete benchmark over EvalImage records.

    Images carrying scores go through the default pipeline (pooled threshold
    search, mask generation, component scoring). Images carrying masks skip
    the pixel level entirely.
    """
    images = list(images)
    if not images:
        raise EmptySubset("no images to evaluate")
    with_scores = all(im.scores is not None for im in images)
    with_masks = all(im.mask is not None for im in images)
    if not with_scores and not with_masks:
        raise ValueError("every image needs scores, or every image needs a mask")

    void_cleared = 0
    if with_scores:
        pairs = [(im.labels, im.scores) for im in images]
        pl = pixel.pool(pairs)
        curve = pixel.pr_curve(pl, config.score_mode, config.score_bins)
        pixel_part = pixel.pixel_report(curve)
        del curve
        masks_iter = (
            maskgen.single_mask(im.labels, im.scores, pixel_part.delta_star, config)
            for im in images
        )
    else:
        pixel_part = None
        bundle = maskgen.masks_from_external(
            [(im.id, im.labels) for im in images],
            {im.id: im.mask.mask for im in images},
        )
        void_cleared = bundle.void_cleared
        masks_iter = (m.mask for m in bundle.masks)

    component_part = _component_stage(images, masks_iter, config)
    try:
        bins = size_stratified(component_part.scores, SIZE_BINS)
    except TooFewComponents:
        bins = None

    subsets = None
    skipped: list[tuple[str, str]] = []
    if group_by is not None:
        subsets = {}
        for tag, bucket in _buckets(images, group_by).items():
            try:
                subsets[tag] = evaluate(
                    bucket,
                    config,
                    dataset=f"{dataset}[{group_by}={tag}]",
                    method=method,
                )
            except (NoPositives, NoNegatives, NoGroundTruthComponents, EmptySubset) as exc:
                skipped.append((tag, str(exc)))

    return BenchmarkReport(
        dataset=dataset,
        method=method,
        config=config,
        pixel=pixel_part,
        component=component_part,
        size_bins=bins,
        subsets=subsets,
        skipped_subsets=tuple(skipped),
        void_cleared=void_cleared,
    )


def _buckets(images, group_by: str) -> dict[str, list[EvalImage]]:
    """Group images by the value part of their ``<kind>:<value>`` tags.

    A bare tag equal to the kind counts as that kind with itself as value;
    images without any matching tag land in the "untagged" bucket. An image
    can join several buckets.
    """
    prefix = group_by + ":"
    out: dict[str, list[EvalImage]] = {}
    for im in images:
        values = [t[len(prefix) :] for t in im.tags if t.startswith(prefix)]
        if group_by in im.tags:
            values.append(group_by)
        if not values:
            values = ["untagged"]
        for v in values:
            out.setdefault(v, []).append(im)
    return dict(sorted(out.items()))


def evaluate_subsets(
    images, config: TrackConfig, group_by: str, dataset: str = "", method: str = ""
) -> tuple[dict[str, BenchmarkReport], tuple[tuple[str, str], ...]]:
    """Independent full evaluations per tag value; returns (reports, skipped)."""
    full = evaluate(images, config, dataset=dataset, method=method, group_by=group_by)
    return full.subsets, full.skipped_subsets


def delta_sweep(
    images, config: TrackConfig, deltas=None, grid: int = SWEEP_GRID
) -> SweepResult:
    """Recompute the component-level F1-bar while varying the pixel threshold.

    The default grid is ``grid`` evenly spaced quantiles of the pooled score
    distribution; the optimal pixel threshold is always added and marked.
    """
    images = list(images)
    pairs = [(im.labels, im.scores) for im in images]
    pl = pixel.pool(pairs)
    curve = pixel.pr_curve(pl, config.score_mode, config.score_bins)
    delta_star, _ = pixel.optimal_f1_threshold(curve)
    del curve
    if deltas is None:
        pooled = pl.pooled_scores()
        deltas = np.unique(np.quantile(pooled, np.linspace(0.0, 1.0, grid)))
        del pooled
    values = sorted({float(d) for d in deltas} | {float(delta_star)})
    points = []
    for d in values:
        masks_iter = (
            maskgen.single_mask(im.labels, im.scores, d, config) for im in images
        )
        part = _component_stage(images, masks_iter, config)
        points.append(SweepPoint(d, part.f1_bar, is_delta_star=d == float(delta_star)))
    star = next(p for p in points if p.is_delta_star)
    return SweepResult(tuple(points), float(delta_star), star.f1_bar)


def report_to_dict(r: BenchmarkReport) -> dict:
    """The results document, keys in schema order."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "dataset": r.dataset,
        "method": r.method,
        "config": {
            "track": r.config.track.value,
            "min_size": r.config.min_component_size,
            "filtering": r.config.filtering,
            "score_mode": r.config.score_mode,
            "score_bins": r.config.score_bins,
            "taus": list(r.config.tau_grid),
        },
        "pixel": None
        if r.pixel is None
        else {
            "auprc": r.pixel.auprc,
            "fpr95": r.pixel.fpr95,
            "f1_star": r.pixel.f1_star,
            "delta_star": r.pixel.delta_star,
        },
        "component": {
            "mean_siou": r.component.mean_siou,
            "mean_ppv": r.component.mean_ppv,
            "no_predictions": r.component.no_predictions,
            "gt_components": len(r.component.scores.per_gt),
            "pred_components": len(r.component.scores.per_pred),
            "per_tau": [
                {"tau": c.tau, "tp": c.tp, "fn": c.fn, "fp": c.fp, "f1": c.f1}
                for c in r.component.per_tau
            ],
            "f1_bar": r.component.f1_bar,
        },
        "void_cleared": r.void_cleared,
        "subsets": None
        if r.subsets is None
        else {tag: report_to_dict(sub) for tag, sub in r.subsets.items()},
        "skipped_subsets": [
            {"tag": tag, "reason": reason} for tag, reason in r.skipped_subsets
        ],
        "size_bins": None
        if r.size_bins is None
        else [
            {
                "count": b.count,
                "min_size": b.min_size,
                "max_size": b.max_size,
                "mean_siou": b.mean_siou,
                "fn_ratio": b.fn_ratio,
            }
            for b in r.size_bins
        ],
        "delta_sweep": None
        if r.delta_sweep is None
        else [
            {"delta": p.delta, "f1_bar": p.f1_bar, "is_delta_star": p.is_delta_star}
            for p in r.delta_sweep.points
        ],
    }
    return doc


def _pct(value: float | None) -> str:
    if value is None:
        return "-"
    return str(Decimal(repr(value * 100.0)).quantize(Decimal("0.01"), ROUND_HALF_UP))


def _table_taus(config: TrackConfig) -> tuple[float, ...]:
    grid = config.tau_grid
    return (grid[0], grid[len(grid) // 2], grid[-1])


def _table_row(r: BenchmarkReport) -> list[str]:
    cells = [
        r.dataset,
        r.method,
        _pct(r.pixel.auprc if r.pixel else None),
        _pct(r.pixel.fpr95 if r.pixel else None),
        _pct(r.pixel.f1_star if r.pixel else None),
        _pct(r.component.mean_siou),
        _pct(r.component.mean_ppv),
    ]
    by_tau = {c.tau: c for c in r.component.per_tau}
    for tau in _table_taus(r.config):
        c = by_tau[tau]
        cells.extend([str(c.fn), str(c.fp), _pct(c.f1)])
    cells.append(_pct(r.component.f1_bar))
    return cells


def _emit_table(r: BenchmarkReport) -> str:
    header = ["dataset", "method", "AuPRC", "FPR95", "F1*", "sIoU", "PPV"]
    for tau in _table_taus(r.config):
        header.extend([f"FN@{tau:g}", f"FP@{tau:g}", f"F1@{tau:g}"])
    header.append("F1bar")
    rows = [_table_row(r)]
    if r.subsets:
        rows.extend(_table_row(sub) for sub in r.subsets.values())
    widths = [
        max(len(header[i]), *(len(row[i]) for row in rows)) for i in range(len(header))
    ]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    for row in rows:
        cells = [
            c.ljust(w) if i < 2 else c.rjust(w)
            for i, (c, w) in enumerate(zip(row, widths))
        ]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def _csv_row(r: BenchmarkReport) -> dict:
    row = {
        "dataset": r.dataset,
        "method": r.method,
        "track": r.config.track.value,
        "min_size": r.config.min_component_size,
        "filtering": r.config.filtering,
        "score_mode": r.config.score_mode,
        "auprc": r.pixel.auprc if r.pixel else "",
        "fpr95": r.pixel.fpr95 if r.pixel else "",
        "f1_star": r.pixel.f1_star if r.pixel else "",
        "delta_star": r.pixel.delta_star if r.pixel else "",
        "mean_siou": r.component.mean_siou,
        "mean_ppv": r.component.mean_ppv,
        "f1_bar": r.component.f1_bar,
    }
    for c in r.component.per_tau:
        row[f"tp@{c.tau:g}"] = c.tp
        row[f"fn@{c.tau:g}"] = c.fn
        row[f"fp@{c.tau:g}"] = c.fp
        row[f"f1@{c.tau:g}"] = c.f1
    return row


def _emit_csv(r: BenchmarkReport) -> str:
    rows = [_csv_row(r)]
    if r.subsets:
        rows.extend(_csv_row(sub) for sub in r.subsets.values())
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def emit(r: BenchmarkReport, format: str = "json") -> bytes:
    """Serialize a report; repeated calls on the same report are byte-identical."""
    if format == "json":
        return (json.dumps(report_to_dict(r), indent=2) + "\n").encode()
    if format == "table":
        return _emit_table(r).encode()
    if format == "csv":
        return _emit_csv(r).encode()
    raise ValueError(f"unknown output format {format!r}")
