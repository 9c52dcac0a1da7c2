"""Default segmentation masks: global thresholding plus minimum-size filtering.

A pixel is predicted when its score reaches the threshold (inclusive) and its
ground-truth label is not void. Void pixels are suppressed before component
extraction so they can never form or join a predicted component; without
this, blobs living entirely in excluded regions would drag down PPV while
contributing nothing to any other metric. Predicted components overlapping
void are clipped, not dropped whole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .connectivity import filter_mask_by_size
from .errors import DimensionMismatch, UnknownImage
from .types import BinaryMask, Label, LabelMap, ScoreMap, TrackConfig, validate_pair


@dataclass(frozen=True)
class MaskBundle:
    """Generated or submitted masks plus the settings that produced them."""

    masks: tuple[BinaryMask, ...]
    delta_used: float | None
    filtered: bool
    min_size_used: int
    void_cleared: int = 0


def single_mask(labels: LabelMap, scores: ScoreMap, delta: float, config: TrackConfig) -> np.ndarray:
    """Threshold and filter one image; returns the boolean prediction grid."""
    pred = (scores.scores >= delta) & (labels.labels != Label.VOID)
    min_size = config.effective_min_size
    if min_size > 1:
        pred = filter_mask_by_size(pred, min_size)
    return pred


def generate_masks(pairs, delta: float, config: TrackConfig) -> MaskBundle:
    """Apply the default segmentation to every (LabelMap, ScoreMap) pair."""
    if not math.isfinite(delta):
        raise ValueError(f"threshold must be finite, got {delta}")
    masks = []
    for labels, scores in pairs:
        validate_pair(labels, scores)
        masks.append(BinaryMask(single_mask(labels, scores, delta, config)))
    return MaskBundle(
        masks=tuple(masks),
        delta_used=float(delta),
        filtered=config.filtering,
        min_size_used=config.effective_min_size,
    )


def masks_from_external(images, masks) -> MaskBundle:
    """Wrap competitor-submitted binary masks, verbatim except for void clearing.

    ``images`` is a sequence of (image_id, LabelMap) in dataset order;
    ``masks`` maps image_id to a boolean grid. No thresholding and no size
    filtering is applied. Predictions on void pixels are cleared and counted
    in ``void_cleared``.
    """
    known = {image_id for image_id, _ in images}
    for mask_id in masks:
        if mask_id not in known:
            raise UnknownImage(f"mask provided for unknown image id {mask_id!r}")
    out = []
    cleared = 0
    for image_id, labels in images:
        if image_id not in masks:
            raise UnknownImage(f"no mask provided for image id {image_id!r}")
        arr = np.asarray(masks[image_id], dtype=bool)
        if arr.shape != labels.labels.shape:
            raise DimensionMismatch(
                f"mask for {image_id!r} is {arr.shape[1]}x{arr.shape[0]} but labels are "
                f"{labels.width}x{labels.height}"
            )
        void = labels.labels == Label.VOID
        on_void = int(np.count_nonzero(arr & void))
        if on_void:
            cleared += on_void
            arr = arr & ~void
        out.append(BinaryMask(arr))
    return MaskBundle(
        masks=tuple(out),
        delta_used=None,
        filtered=False,
        min_size_used=0,
        void_cleared=cleared,
    )
