"""Synthetic scenes with a controllable detector, and naive metric oracles.

Scenes place non-overlapping (and non-adjacent, so the component count is
exact) rectangular or elliptic anomaly components inside an optional void
border, then synthesize a score field: Gaussian base noise, a fixed elevation
on every "hit" component, square false-alarm blobs, and an optional Gaussian
blur. Everything is driven by one seeded generator, so a spec plus its seed
reproduces the scene bit for bit.

The oracles re-derive every metric by definition: the pixel oracle re-tallies
the confusion matrix from scratch at each distinct score, the component
oracle materializes every component as an explicit pixel set via its own
flood fill and evaluates the formulas with set arithmetic. They are quadratic
and meant for desk-scale instances; they ship in the library so downstream
users can self-verify an installation.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import UnsatisfiableSpec
from .types import BinaryMask, Label, LabelMap, ScoreMap, default_tau_grid

_PLACEMENT_ATTEMPTS = 1000


@dataclass(frozen=True)
class SceneSpec:
    """Knobs for one synthetic scene."""

    width: int = 256
    height: int = 256
    component_count: int = 4
    size_range: tuple[int, int] = (40, 400)
    void_fraction: float = 0.0
    hit_probability: float = 1.0
    noise_level: float = 0.0
    #: expected number of square false-alarm blobs per scene (Poisson mean)
    false_alarm_rate: float = 0.0
    blur_sigma: float = 0.0
    elevation: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("scene dimensions must be positive")
        if self.component_count < 0:
            raise ValueError("component_count must be >= 0")
        lo, hi = self.size_range
        if not 1 <= lo <= hi:
            raise ValueError("size_range must satisfy 1 <= lo <= hi")
        if not 0.0 <= self.void_fraction < 1.0:
            raise ValueError("void_fraction must lie in [0, 1)")
        if not 0.0 <= self.hit_probability <= 1.0:
            raise ValueError("hit_probability must lie in [0, 1]")
        if self.false_alarm_rate < 0 or self.noise_level < 0 or self.blur_sigma < 0:
            raise ValueError("rates, noise and blur must be non-negative")


def _footprint(rng: np.random.Generator, area: int) -> np.ndarray:
    """A small boolean stamp of roughly the requested pixel count."""
    aspect = rng.uniform(0.5, 2.0)
    if rng.random() < 0.5:
        h = max(1, round(math.sqrt(area / aspect)))
        w = max(1, round(area / h))
        return np.ones((h, w), dtype=bool)
    a = max(0.5, math.sqrt(area * aspect / math.pi))
    b = max(0.5, area / (math.pi * a))
    h = max(1, int(2 * a))
    w = max(1, int(2 * b))
    yy, xx = np.mgrid[0:h, 0:w]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    stamp = ((yy - cy) / max(a, 0.5)) ** 2 + ((xx - cx) / max(b, 0.5)) ** 2 <= 1.0
    if not stamp.any():
        stamp[h // 2, w // 2] = True
    return stamp


def generate_scene(spec: SceneSpec) -> tuple[LabelMap, ScoreMap]:
    """Build one (labels, scores) pair from the spec, deterministically."""
    rng = np.random.default_rng(spec.seed)
    labels = np.zeros((spec.height, spec.width), dtype=np.uint8)
    band = round(spec.void_fraction * spec.height / 2)
    band = min(band, (spec.height - 1) // 2)
    if band > 0:
        labels[:band, :] = Label.VOID
        labels[spec.height - band :, :] = Label.VOID
    r_lo, r_hi = band, spec.height - band

    occupied = np.zeros_like(labels, dtype=bool)
    placements = []
    for _ in range(spec.component_count):
        placed = False
        for _attempt in range(_PLACEMENT_ATTEMPTS):
            area = int(rng.integers(spec.size_range[0], spec.size_range[1] + 1))
            stamp = _footprint(rng, area)
            fh, fw = stamp.shape
            if fh > r_hi - r_lo or fw > spec.width:
                continue
            r0 = int(rng.integers(r_lo, r_hi - fh + 1))
            c0 = int(rng.integers(0, spec.width - fw + 1))
            # A one-pixel margin around the stamp's bounding box keeps new
            # components from touching old ones even diagonally.
            window = occupied[max(r0 - 1, 0) : r0 + fh + 1, max(c0 - 1, 0) : c0 + fw + 1]
            if window.any():
                continue
            labels[r0 : r0 + fh, c0 : c0 + fw][stamp] = Label.ANOMALY
            occupied[r0 : r0 + fh, c0 : c0 + fw] |= stamp
            placements.append((r0, c0, stamp))
            placed = True
            break
        if not placed:
            raise UnsatisfiableSpec(
                f"could not place component {len(placements) + 1} of "
                f"{spec.component_count} after {_PLACEMENT_ATTEMPTS} attempts"
            )

    if spec.noise_level > 0:
        scores = rng.standard_normal(labels.shape, dtype=np.float32)
        scores *= np.float32(spec.noise_level)
    else:
        scores = np.zeros(labels.shape, dtype=np.float32)
    for r0, c0, stamp in placements:
        if rng.random() < spec.hit_probability:
            scores[r0 : r0 + stamp.shape[0], c0 : c0 + stamp.shape[1]][stamp] += np.float32(
                spec.elevation
            )
    if spec.false_alarm_rate > 0:
        for _ in range(int(rng.poisson(spec.false_alarm_rate))):
            side = int(rng.integers(3, 13))
            r0 = int(rng.integers(0, max(spec.height - side, 0) + 1))
            c0 = int(rng.integers(0, max(spec.width - side, 0) + 1))
            scores[r0 : r0 + side, c0 : c0 + side] += np.float32(spec.elevation)
    if spec.blur_sigma > 0:
        scores = ndimage.gaussian_filter(scores, spec.blur_sigma)
    return LabelMap(labels), ScoreMap(scores)


def oracle_pixel(
    labels: LabelMap, scores: ScoreMap, target: float = 0.95
) -> tuple[float, float, float, float]:
    """Re-derive (auprc, fpr95, f1_star, delta_star) from scratch.

    Retallies the confusion matrix at every distinct score by rescanning the
    whole stream, so it is quadratic and only suitable for small instances.
    """
    valid = labels.labels != Label.VOID
    s = scores.scores[valid].astype(np.float64)
    y = labels.labels[valid] == Label.ANOMALY
    positives = int(np.count_nonzero(y))
    negatives = y.size - positives
    if positives == 0 or negatives == 0:
        raise ValueError("oracle needs at least one positive and one negative pixel")
    thresholds = np.unique(s)[::-1]
    ap_terms = []
    prev_recall = 0.0
    fpr95 = None
    best_f1 = -1.0
    best_delta = float("nan")
    for delta in thresholds:
        predicted = s >= delta
        tp = int(np.count_nonzero(predicted & y))
        pred_count = int(np.count_nonzero(predicted))
        precision = tp / pred_count
        recall = tp / positives
        ap_terms.append(precision * (recall - prev_recall))
        prev_recall = recall
        if fpr95 is None and recall >= target:
            fpr95 = (pred_count - tp) / negatives
        f1 = 2.0 * tp / (pred_count + positives)
        if f1 > best_f1:
            best_f1 = f1
            best_delta = float(delta)
    return math.fsum(ap_terms), fpr95, best_f1, best_delta


def _flood_components(mask: np.ndarray) -> list[set[tuple[int, int]]]:
    """8-connected components via breadth-first flood fill, raster order."""
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    out = []
    for r in range(h):
        for c in range(w):
            if not mask[r, c] or seen[r, c]:
                continue
            comp = set()
            queue = deque([(r, c)])
            seen[r, c] = True
            while queue:
                cr, cc = queue.popleft()
                comp.add((cr, cc))
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        nr, nc = cr + dr, cc + dc
                        if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] and not seen[nr, nc]:
                            seen[nr, nc] = True
                            queue.append((nr, nc))
            out.append(comp)
    return out


@dataclass(frozen=True)
class OracleComponentReport:
    """Component metrics re-derived by explicit set arithmetic."""

    sious: tuple[float, ...]
    ious: tuple[float, ...]
    ppvs: tuple[float, ...]
    mean_siou: float
    mean_ppv: float
    per_tau: tuple[tuple[float, int, int, int, float], ...]  # (tau, tp, fn, fp, f1)
    f1_bar: float


def oracle_component(
    labels: LabelMap, mask: BinaryMask, tau_grid=None
) -> OracleComponentReport:
    """Evaluate the component formulas literally on materialized pixel sets."""
    if tau_grid is None:
        tau_grid = default_tau_grid()
    gt_comps = _flood_components(np.asarray(labels.labels == Label.ANOMALY))
    pred_comps = _flood_components(np.asarray(mask.mask))
    gt_all = set().union(*gt_comps) if gt_comps else set()

    sious = []
    ious = []
    for i, k in enumerate(gt_comps):
        k_hat = set()
        for p in pred_comps:
            if p & k:
                k_hat |= p
        if not k_hat:
            sious.append(0.0)
            ious.append(0.0)
            continue
        others = set()
        for j, other in enumerate(gt_comps):
            if j != i:
                others |= other
        union = k | k_hat
        sious.append(len(k & k_hat) / len(union - others))
        ious.append(len(k & k_hat) / len(union))

    ppvs = [len(p & gt_all) / len(p) for p in pred_comps]

    per_tau = []
    f1s = []
    for tau in tau_grid:
        tp = sum(1 for v in sious if v > tau)
        fn = len(sious) - tp
        fp = sum(1 for v in ppvs if v <= tau)
        denom = 2 * tp + fn + fp
        f1 = 2 * tp / denom if denom else 0.0
        per_tau.append((tau, tp, fn, fp, f1))
        f1s.append(f1)

    return OracleComponentReport(
        sious=tuple(sious),
        ious=tuple(ious),
        ppvs=tuple(ppvs),
        mean_siou=math.fsum(sious) / len(sious) if sious else 0.0,
        mean_ppv=math.fsum(ppvs) / len(ppvs) if ppvs else 0.0,
        per_tau=tuple(per_tau),
        f1_bar=math.fsum(f1s) / len(f1s),
    )
