"""Pixel-level evaluation: pooled PR curve, AuPRC, FPR95, optimal F1.

Scores and labels from every image are pooled into one stream (void pixels
dropped) and swept by a single global threshold, descending. Two exact-mode
storage strategies sit behind one block-iteration interface:

* materialized: pooled float64 scores are argsorted and the per-threshold
  cumulative tallies kept as plain arrays. Simple, exact, fine up to a few
  tens of millions of pixels.

* packed: each (score, label) pixel becomes one uint64 key, an
  order-preserving encoding of the float32 score shifted left once with the
  label in the low bit. One in-place sort of the key buffer replaces the
  argsort plus gather, and all metric passes then stream over the sorted
  buffer in fixed-size blocks, so peak memory stays near the 8 bytes/pixel
  of the buffer itself. Used automatically for pools too large to
  materialize; float64 inputs are cast to float32 with a warning.

Cumulative tallies only ever matter at the last pixel of each equal-score
group, and those positions need nothing but running totals, so groups that
straddle block boundaries need no special casing beyond peeking one key
below the block.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NoNegatives, NoPositives
from .types import Label, LabelMap, ScoreMap, validate_pair

#: Pools at most this many pixels are materialized as float64; larger pools
#: switch to the packed uint64 representation.
_MATERIALIZE_LIMIT = 1 << 25

#: Pixels per block when streaming over a packed curve.
_BLOCK = 1 << 22

_SIGN = np.uint32(0x80000000)


def _encode_f32(scores: np.ndarray) -> np.ndarray:
    """Map float32 scores to uint32 keys whose unsigned order matches float order."""
    s = np.asarray(scores, dtype=np.float32) + np.float32(0.0)  # folds -0.0 into +0.0
    b = s.view(np.uint32)
    return np.where(b & _SIGN, ~b, b | _SIGN)


def _decode_f32(bits: np.ndarray) -> np.ndarray:
    """Inverse of _encode_f32."""
    bits = np.asarray(bits, dtype=np.uint32)
    raw = np.where(bits & _SIGN, bits & ~_SIGN, ~bits)
    return raw.view(np.float32)


class PixelPool:
    """Pooled non-void (score, label) stream over a dataset.

    Holds only a reference to the validated pairs plus per-image counts;
    pixel data is re-read from the pairs on each pass, so pooling never
    duplicates the dataset in memory.
    """

    def __init__(self, pairs):
        self._pairs = []
        self._counts = []
        positives = 0
        negatives = 0
        has_float64 = False
        for labels, scores in pairs:
            validate_pair(labels, scores)
            pos = int(np.count_nonzero(labels.labels == Label.ANOMALY))
            neg = int(np.count_nonzero(labels.labels == Label.NOT_ANOMALY))
            positives += pos
            negatives += neg
            self._pairs.append((labels, scores))
            self._counts.append(pos + neg)
            has_float64 = has_float64 or scores.scores.dtype == np.float64
        if positives == 0:
            raise NoPositives("pooled stream has zero anomaly pixels after void exclusion")
        self.positives = positives
        self.negatives = negatives
        self.total = positives + negatives
        self.has_float64 = has_float64

    def __len__(self) -> int:
        return self.total

    @property
    def counts(self) -> tuple[int, ...]:
        """Non-void pixel count contributed by each image, in pool order."""
        return tuple(self._counts)

    def iter_chunks(self):
        """Yield one (scores, is_anomaly) flat pair per image, void removed."""
        for labels, scores in self._pairs:
            grid = labels.labels
            if grid.max() == Label.VOID:
                valid = grid != Label.VOID
                yield scores.scores[valid], grid[valid] == Label.ANOMALY
            else:
                yield scores.scores.ravel(), (grid == Label.ANOMALY).ravel()

    def pooled_scores(self) -> np.ndarray:
        """All non-void scores as one float64 array (materialized; small pools only)."""
        out = np.empty(self.total, dtype=np.float64)
        off = 0
        for s, _ in self.iter_chunks():
            out[off : off + s.size] = s
            off += s.size
        return out


def pool(pairs) -> PixelPool:
    """Validate and pool (LabelMap, ScoreMap) pairs into one score/label stream."""
    return PixelPool(pairs)


@dataclass(frozen=True)
class PRCurve:
    """Descending-threshold precision/recall curve over the pooled stream.

    Exactly one of the two storages is populated: (_thresholds, _tp, _pred)
    for materialized curves, _key (sorted ascending) for packed ones. The
    cumulative arrays count pixels with score >= threshold.
    """

    positives: int
    negatives: int
    _thresholds: np.ndarray | None = None
    _tp: np.ndarray | None = None
    _pred: np.ndarray | None = None
    _key: np.ndarray | None = None

    @property
    def is_packed(self) -> bool:
        return self._key is not None

    def iter_blocks(self, block: int = _BLOCK):
        """Yield (thresholds, tp_cum, pred_cum) arrays in descending threshold order.

        Counts are global running totals; concatenating all yielded blocks
        gives one entry per distinct threshold.
        """
        if self._key is not None:
            yield from _blocks_packed(self._key, block)
            return
        for i in range(0, self._thresholds.size, block):
            yield (
                self._thresholds[i : i + block],
                self._tp[i : i + block],
                self._pred[i : i + block],
            )

    def _materialized(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._key is not None:
            raise RuntimeError("curve is packed; per-point arrays are not materialized")
        return self._thresholds, self._tp, self._pred

    @property
    def thresholds(self) -> np.ndarray:
        return self._materialized()[0]

    @property
    def recall(self) -> np.ndarray:
        _, tp, _ = self._materialized()
        return tp / self.positives

    tpr = recall

    @property
    def precision(self) -> np.ndarray:
        _, tp, pred = self._materialized()
        return tp / pred

    @property
    def fpr(self) -> np.ndarray:
        _, tp, pred = self._materialized()
        return (pred - tp) / self.negatives


def _blocks_packed(key: np.ndarray, block: int):
    one = np.uint64(1)
    tp_run = 0
    n_run = 0
    stop = key.size
    while stop > 0:
        start = max(0, stop - block)
        rev = key[start:stop][::-1]  # descending view, no copy
        sc = np.right_shift(rev, one).astype(np.uint32)
        lab = np.bitwise_and(rev, one).astype(np.int64)
        c_tp = np.cumsum(lab)
        change = sc[:-1] != sc[1:]
        if start == 0:
            last_done = True
        else:
            below = np.uint32(int(key[start - 1]) >> 1)
            last_done = below != sc[-1]
        ends = np.flatnonzero(np.append(change, last_done))
        yield (
            _decode_f32(sc[ends]).astype(np.float64),
            tp_run + c_tp[ends],
            n_run + ends + 1,
        )
        tp_run += int(c_tp[-1])
        n_run += sc.size
        stop = start


def _exact_materialized(p: PixelPool) -> PRCurve:
    scores = np.empty(p.total, dtype=np.float64)
    labels = np.empty(p.total, dtype=bool)
    off = 0
    for s, l in p.iter_chunks():
        scores[off : off + s.size] = s
        labels[off : off + s.size] = l
        off += s.size
    order = np.argsort(scores, kind="stable")
    s = scores[order][::-1]
    l = labels[order][::-1]
    ends = np.flatnonzero(np.append(s[:-1] != s[1:], True))
    return PRCurve(
        positives=p.positives,
        negatives=p.negatives,
        _thresholds=s[ends].copy(),
        _tp=np.cumsum(l, dtype=np.int64)[ends],
        _pred=ends + 1,
    )


def _exact_packed(p: PixelPool) -> PRCurve:
    if p.has_float64:
        warnings.warn(
            f"pool of {p.total} pixels exceeds the materialization limit; "
            "float64 scores are cast to float32 for the packed exact sweep",
            RuntimeWarning,
            stacklevel=3,
        )
    key = np.empty(p.total, dtype=np.uint64)
    off = 0
    for s, l in p.iter_chunks():
        dest = key[off : off + s.size]
        np.left_shift(_encode_f32(s).astype(np.uint64), np.uint64(1), out=dest)
        np.bitwise_or(dest, l.astype(np.uint64), out=dest)
        off += s.size
    key.sort()
    return PRCurve(positives=p.positives, negatives=p.negatives, _key=key)


def _binned(p: PixelPool, bins: int) -> PRCurve:
    lo = np.inf
    hi = -np.inf
    for s, _ in p.iter_chunks():
        if s.size:
            lo = min(lo, float(s.min()))
            hi = max(hi, float(s.max()))
    if hi == lo:
        return PRCurve(
            positives=p.positives,
            negatives=p.negatives,
            _thresholds=np.array([lo]),
            _tp=np.array([p.positives], dtype=np.int64),
            _pred=np.array([p.total], dtype=np.int64),
        )
    pos_h = np.zeros(bins, dtype=np.int64)
    neg_h = np.zeros(bins, dtype=np.int64)
    scale = bins / (hi - lo)
    for s, l in p.iter_chunks():
        idx = ((s.astype(np.float64) - lo) * scale).astype(np.int64)
        np.clip(idx, 0, bins - 1, out=idx)
        pos_h += np.bincount(idx[l], minlength=bins)
        neg_h += np.bincount(idx[~l], minlength=bins)
    # Sweep bin lower edges descending; the threshold at edge j predicts all
    # pixels that fell into bins j..bins-1.
    tp = np.cumsum(pos_h[::-1])
    pred = np.cumsum((pos_h + neg_h)[::-1])
    edges = lo + (hi - lo) * (np.arange(bins - 1, -1, -1) / bins)
    return PRCurve(
        positives=p.positives, negatives=p.negatives, _thresholds=edges, _tp=tp, _pred=pred
    )


def pr_curve(p: PixelPool, mode: str = "exact", bins: int = 4096) -> PRCurve:
    """Build the pooled PR curve in exact or binned mode."""
    if p.positives == 0:
        raise NoPositives("curve needs at least one anomaly pixel")
    if p.negatives == 0:
        raise NoNegatives("curve needs at least one not-anomaly pixel")
    if mode == "exact":
        if p.total <= _MATERIALIZE_LIMIT:
            return _exact_materialized(p)
        return _exact_packed(p)
    if mode == "binned":
        if bins < 2:
            raise ValueError("binned mode needs at least 2 bins")
        return _binned(p, bins)
    raise ValueError(f"unknown score mode {mode!r}")


def auprc(curve: PRCurve) -> float:
    """Average-precision step integration of the descending sweep.

    Sum of precision * (recall step), with recall 0 before the first
    threshold.
    """
    total = 0.0
    prev_r = 0.0
    pos = curve.positives
    for _, tp, pred in curve.iter_blocks():
        r = tp / pos
        p = tp / pred
        dr = np.diff(r, prepend=prev_r)
        total += float(np.dot(p, dr))
        prev_r = float(r[-1])
    return total


def fpr_at_tpr(curve: PRCurve, target: float = 0.95) -> float:
    """FPR at the largest threshold whose TPR reaches the target.

    No interpolation: the sweep stops at the first (highest) threshold with
    TPR >= target, which always exists because TPR reaches 1 at the lowest.
    """
    pos = curve.positives
    neg = curve.negatives
    for _, tp, pred in curve.iter_blocks():
        hit = np.flatnonzero(tp / pos >= target)
        if hit.size:
            i = int(hit[0])
            return float((pred[i] - tp[i]) / neg)
    raise AssertionError("TPR never reached the target; curve is corrupt")


def optimal_f1_threshold(curve: PRCurve) -> tuple[float, float]:
    """Argmax of the pixel-wise F1 over the swept thresholds.

    Returns (delta_star, f1_star); ties broken toward the largest threshold.
    F1 is computed from the counts as 2*tp / (pred + positives), the same
    quantity as the precision/recall harmonic mean at every swept point.
    """
    pos = curve.positives
    best_f1 = -1.0
    best_thr = float("nan")
    for thr, tp, pred in curve.iter_blocks():
        f1 = 2.0 * tp / (pred + pos)
        i = int(np.argmax(f1))
        if float(f1[i]) > best_f1:
            best_f1 = float(f1[i])
            best_thr = float(thr[i])
    return best_thr, best_f1


@dataclass(frozen=True)
class PixelReport:
    """The pixel-level leaderboard columns."""

    auprc: float
    fpr95: float
    f1_star: float
    delta_star: float

    def __post_init__(self):
        # Step integration can overshoot the unit interval by an ulp or two;
        # clamp that, reject anything larger.
        for name in ("auprc", "fpr95", "f1_star"):
            v = getattr(self, name)
            if not -1e-9 <= v <= 1.0 + 1e-9:
                raise ValueError(f"{name} = {v} outside [0, 1]")
            object.__setattr__(self, name, min(max(v, 0.0), 1.0))


def pixel_report(curve: PRCurve) -> PixelReport:
    """Compute all pixel-level metrics from one curve."""
    delta_star, f1_star = optimal_f1_threshold(curve)
    return PixelReport(
        auprc=auprc(curve),
        fpr95=fpr_at_tpr(curve, 0.95),
        f1_star=f1_star,
        delta_star=delta_star,
    )
