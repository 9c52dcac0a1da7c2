"""Connected-component extraction on binary grids.

All components in this engine are 8-connected (diagonal neighbours count).
Component ids are canonical: 0 is background and components are numbered
1..n in raster order of each component's first pixel, so two runs over the
same mask always produce identical label grids no matter how the underlying
labelling pass ordered its provisional ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

#: 3x3 all-ones structuring element = the 8-connected neighbourhood.
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)
#: 4-connected variant, kept for oracle experiments only; the benchmark path
#: never uses it.
FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def label_components(mask: np.ndarray, structure: np.ndarray = EIGHT_CONNECTED):
    """Label connected components of a boolean grid.

    Returns (labels, count) where labels is int32, 0 = background, and
    component ids 1..count appear in raster order of first occurrence.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
        raise ValueError(f"mask must be a non-empty 2-d grid, got shape {mask.shape}")
    raw, count = ndimage.label(mask, structure=structure)
    if count <= 1:
        return raw.astype(np.int32, copy=False), int(count)
    return _canonical_order(raw, count), int(count)


def _canonical_order(raw: np.ndarray, count: int) -> np.ndarray:
    """Renumber labels so ids follow raster order of each component's first pixel."""
    flat = raw.ravel()
    ids, first = np.unique(flat, return_index=True)
    if ids[0] == 0:
        ids, first = ids[1:], first[1:]
    order = np.argsort(first, kind="stable")
    remap = np.zeros(count + 1, dtype=np.int32)
    remap[ids[order]] = np.arange(1, count + 1, dtype=np.int32)
    return remap[raw]


@dataclass(frozen=True)
class Component:
    """One maximal 8-connected set of true pixels.

    ``pixels`` is materialized lazily from the owning set's label grid; on
    benchmark-sized images nothing touches it, while desk-scale oracle tests
    can still enumerate exact pixel sets.
    """

    id: int
    size: int
    bbox: tuple[int, int, int, int]  # (min_row, min_col, max_row, max_col)
    _index: np.ndarray = field(repr=False, compare=False)

    @property
    def pixels(self) -> frozenset[tuple[int, int]]:
        rows, cols = np.nonzero(self._index == self.id)
        return frozenset(zip(rows.tolist(), cols.tolist()))


@dataclass(frozen=True)
class ComponentSet:
    """All components of one binary grid plus the per-pixel id map.

    ``index`` holds 0 for background and the component id elsewhere. ``sizes``
    is aligned so sizes[i] is the pixel count of component id i+1.
    """

    index: np.ndarray
    sizes: np.ndarray
    bboxes: tuple[tuple[int, int, int, int], ...]

    @property
    def count(self) -> int:
        return len(self.sizes)

    def components(self) -> tuple[Component, ...]:
        return tuple(
            Component(i + 1, int(self.sizes[i]), self.bboxes[i], self.index)
            for i in range(self.count)
        )

    def to_mask(self) -> np.ndarray:
        return self.index > 0

    def __eq__(self, other) -> bool:
        return isinstance(other, ComponentSet) and np.array_equal(self.index, other.index)


def extract_components(mask: np.ndarray) -> ComponentSet:
    """Extract all maximal 8-connected components of the true pixels.

    An all-false mask yields an empty ComponentSet.
    """
    labels, count = label_components(mask)
    if count == 0:
        return ComponentSet(labels, np.zeros(0, dtype=np.int64), ())
    sizes = np.bincount(labels.ravel(), minlength=count + 1)[1:].astype(np.int64)
    slices = ndimage.find_objects(labels, max_label=count)
    bboxes = tuple(
        (s[0].start, s[1].start, s[0].stop - 1, s[1].stop - 1) for s in slices
    )
    labels.flags.writeable = False
    return ComponentSet(labels, sizes, bboxes)


def filter_by_size(cs: ComponentSet, min_size: int) -> ComponentSet:
    """Drop components strictly smaller than min_size pixels.

    A component of exactly min_size pixels survives. Surviving ids are
    renumbered compactly; dropping components preserves raster order, so no
    relabelling pass is needed.
    """
    if min_size < 0:
        raise ValueError("min_size must be >= 0")
    keep = cs.sizes >= min_size
    if keep.all():
        return cs
    remap = np.zeros(cs.count + 1, dtype=np.int32)
    remap[1:][keep] = np.arange(1, int(keep.sum()) + 1, dtype=np.int32)
    index = remap[cs.index]
    index.flags.writeable = False
    return ComponentSet(
        index,
        cs.sizes[keep],
        tuple(b for b, k in zip(cs.bboxes, keep) if k),
    )


def filter_mask_by_size(mask: np.ndarray, min_size: int) -> np.ndarray:
    """Mask-level view of filter_by_size: drop small components, return boolean grid."""
    mask = np.asarray(mask, dtype=bool)
    if min_size <= 1:
        return mask.copy()
    labels, count = label_components(mask)
    if count == 0:
        return mask.copy()
    sizes = np.bincount(labels.ravel(), minlength=count + 1)[1:]
    keep = np.concatenate(([False], sizes >= min_size))
    return keep[labels]
