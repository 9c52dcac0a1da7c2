"""Component-level metrics: adjusted IoU, PPV, per-threshold counts, F1.

A ground-truth component k is matched against the union of all predicted
components touching it. The adjusted IoU (sIoU) removes pixels of *other*
ground-truth components from the union before dividing, so one prediction
covering several nearby targets is not punished for bridging them. Predicted
components are judged by their precision (PPV): the fraction of their pixels
lying on any ground-truth anomaly.

Per image the batch path counts every (ground truth, prediction) overlap in
one pass over the pixel grid using a joint label code, which keeps the whole
dataset evaluation linear in pixel count. The public per-component operations
use literal mask arithmetic instead; both routes divide exact integer counts,
so they agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connectivity import Component, ComponentSet
from .errors import NoGroundTruthComponents, TooFewComponents
from .types import TrackConfig


@dataclass(frozen=True)
class GtScore:
    """Per-ground-truth-component outcome."""

    image_id: str
    component_id: int
    size: int
    siou: float
    iou: float


@dataclass(frozen=True)
class PredScore:
    """Per-predicted-component outcome."""

    image_id: str
    component_id: int
    size: int
    ppv: float


@dataclass(frozen=True)
class ComponentScores:
    """All per-component outcomes across the dataset, in image order."""

    per_gt: tuple[GtScore, ...]
    per_pred: tuple[PredScore, ...]

    def siou_values(self) -> np.ndarray:
        return np.array([g.siou for g in self.per_gt], dtype=np.float64)

    def ppv_values(self) -> np.ndarray:
        return np.array([p.ppv for p in self.per_pred], dtype=np.float64)


@dataclass(frozen=True)
class TauStats:
    """Classification counts and F1 at one quality threshold."""

    tau: float
    tp: int
    fn: int
    fp: int
    f1: float


@dataclass(frozen=True)
class ComponentReport:
    """The component-level leaderboard columns plus the raw per-component scores."""

    mean_siou: float
    mean_ppv: float
    per_tau: tuple[TauStats, ...]
    f1_bar: float
    scores: ComponentScores
    no_predictions: bool = False


def image_component_stats(
    gt: ComponentSet, pred: ComponentSet
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-image (siou, iou, ppv) arrays, indexed by component id - 1.

    One pass over the pixel grid: overlapping (gt, pred) label pairs are
    packed into a joint integer code and counted with np.unique. All
    divisions happen on exact integer counts held in float64.
    """
    ng = gt.count
    npred = pred.count
    siou = np.zeros(ng, dtype=np.float64)
    iou = np.zeros(ng, dtype=np.float64)
    if npred == 0:
        return siou, iou, np.zeros(0, dtype=np.float64)
    gt_sizes = gt.sizes.astype(np.float64)
    pred_sizes = pred.sizes.astype(np.float64)
    both = (gt.index > 0) & (pred.index > 0)
    g = gt.index[both].astype(np.int64)
    p = pred.index[both].astype(np.int64)
    covered = np.bincount(p, minlength=npred + 1)[1:].astype(np.float64)
    ppv = covered / pred_sizes
    if ng == 0 or g.size == 0:
        return siou, iou, ppv
    joint = g * (npred + 1) + p
    pairs, counts = np.unique(joint, return_counts=True)
    gi = (pairs // (npred + 1)) - 1
    pi = (pairs % (npred + 1)) - 1
    counts = counts.astype(np.float64)
    inter = np.bincount(gi, weights=counts, minlength=ng)
    # Pixels a touching prediction adds to the adjusted union: its size minus
    # everything it has on any ground-truth component.
    foreign = pred_sizes - covered
    adjusted_union = gt_sizes + np.bincount(gi, weights=foreign[pi], minlength=ng)
    plain_union = gt_sizes + np.bincount(gi, weights=pred_sizes[pi], minlength=ng) - inter
    siou = inter / adjusted_union
    iou = inter / plain_union
    return siou, iou, ppv


def siou(k: Component, gt_set: ComponentSet, pred_set: ComponentSet) -> float:
    """Adjusted IoU of one ground-truth component, by literal mask arithmetic."""
    kmask = gt_set.index == k.id
    touched = np.unique(pred_set.index[kmask])
    touched = touched[touched > 0]
    if touched.size == 0:
        return 0.0
    k_hat = np.isin(pred_set.index, touched)
    union = kmask | k_hat
    other_gt = (gt_set.index > 0) & ~kmask
    inter = int(np.count_nonzero(kmask & k_hat))
    denom = int(np.count_nonzero(union & ~other_gt))
    return inter / denom


def plain_iou(k: Component, gt_set: ComponentSet, pred_set: ComponentSet) -> float:
    """Unadjusted IoU of one ground-truth component against its touching predictions."""
    kmask = gt_set.index == k.id
    touched = np.unique(pred_set.index[kmask])
    touched = touched[touched > 0]
    if touched.size == 0:
        return 0.0
    k_hat = np.isin(pred_set.index, touched)
    inter = int(np.count_nonzero(kmask & k_hat))
    return inter / int(np.count_nonzero(kmask | k_hat))


def ppv(k_hat: Component, gt_set: ComponentSet) -> float:
    """Precision of one predicted component: fraction of its pixels on ground truth."""
    on = k_hat._index == k_hat.id
    return int(np.count_nonzero(on & (gt_set.index > 0))) / k_hat.size


def classify(
    gt_set: ComponentSet, pred_set: ComponentSet, tau: float
) -> tuple[int, int, int]:
    """Per-image (tp, fn, fp) at one threshold.

    A target counts as TP only when its sIoU strictly exceeds tau; a
    prediction counts as FP when its PPV is at most tau.
    """
    s, _, p = image_component_stats(gt_set, pred_set)
    tp = int(np.count_nonzero(s > tau))
    return tp, gt_set.count - tp, int(np.count_nonzero(p <= tau))


def f1_at(tp: int, fn: int, fp: int) -> float:
    """Component-wise F1 from counts; 0 when there is nothing to score."""
    denom = 2 * tp + fn + fp
    return 2 * tp / denom if denom else 0.0


def evaluate_components(
    gt_sets,
    pred_sets,
    config: TrackConfig,
    image_ids=None,
) -> ComponentReport:
    """Score every image pair and aggregate the dataset-level component report.

    ``gt_sets`` and ``pred_sets`` may be lazy iterables; each pair of sets is
    reduced to its per-component records and dropped before the next image is
    touched, so the peak footprint stays per-image.
    """
    per_gt = []
    per_pred = []
    for n, (gt, pred) in enumerate(zip(gt_sets, pred_sets, strict=True)):
        image_id = image_ids[n] if image_ids is not None else str(n)
        s, i, p = image_component_stats(gt, pred)
        per_gt.extend(
            GtScore(image_id, cid + 1, int(gt.sizes[cid]), float(s[cid]), float(i[cid]))
            for cid in range(gt.count)
        )
        per_pred.extend(
            PredScore(image_id, cid + 1, int(pred.sizes[cid]), float(p[cid]))
            for cid in range(pred.count)
        )
    if not per_gt:
        raise NoGroundTruthComponents("dataset has zero anomaly components")
    scores = ComponentScores(tuple(per_gt), tuple(per_pred))
    siou_all = scores.siou_values()
    ppv_all = scores.ppv_values()
    no_predictions = ppv_all.size == 0
    per_tau = []
    for tau in config.tau_grid:
        tp = int(np.count_nonzero(siou_all > tau))
        fn = siou_all.size - tp
        fp = int(np.count_nonzero(ppv_all <= tau))
        per_tau.append(TauStats(tau, tp, fn, fp, f1_at(tp, fn, fp)))
    return ComponentReport(
        mean_siou=float(np.mean(siou_all)),
        mean_ppv=0.0 if no_predictions else float(np.mean(ppv_all)),
        per_tau=tuple(per_tau),
        f1_bar=float(np.mean([c.f1 for c in per_tau])),
        scores=scores,
        no_predictions=no_predictions,
    )


@dataclass(frozen=True)
class SizeBin:
    """One equal-count size interval of ground-truth components."""

    count: int
    min_size: int
    max_size: int
    mean_siou: float
    fn_ratio: float


def size_stratified(scores: ComponentScores, bins: int = 8) -> tuple[SizeBin, ...]:
    """Split ground-truth components into equal-count size intervals.

    Components are sorted by size and split so each interval holds the same
    count, remainders going to the smallest-size intervals. An interval never
    ends in the middle of a run of equal sizes: the run is absorbed as long
    as every following interval can still receive at least one component.
    Per interval, reports the mean sIoU and the fraction of components with
    sIoU exactly 0 (targets no prediction touched at all).
    """
    n = len(scores.per_gt)
    if n < bins:
        raise TooFewComponents(f"need at least {bins} ground-truth components, have {n}")
    entries = sorted(scores.per_gt, key=lambda g: g.size)
    sizes = [g.size for g in entries]
    out = []
    idx = 0
    for remaining_bins in range(bins, 0, -1):
        take = -(-(n - idx) // remaining_bins)
        end = n if remaining_bins == 1 else idx + take
        # Absorb the tie run, but only while every later interval can still
        # get at least one component after this one grows.
        while end < n and sizes[end] == sizes[end - 1] and n - end >= remaining_bins:
            end += 1
        chunk = entries[idx:end]
        vals = np.array([g.siou for g in chunk], dtype=np.float64)
        out.append(
            SizeBin(
                count=len(chunk),
                min_size=chunk[0].size,
                max_size=chunk[-1].size,
                mean_siou=float(vals.mean()),
                fn_ratio=float(np.count_nonzero(vals == 0.0) / len(chunk)),
            )
        )
        idx = end
    return tuple(out)
