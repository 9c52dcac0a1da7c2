"""File formats and manifest handling.

A dataset is a JSON manifest next to its image files:

    {"name": ..., "track": "anomaly" | "obstacle",
     "images": [{"id", "label", "width", "height", "tags": [...]}, ...],
     "label_remap": {"<raw value>": <class value>}}          (optional)

Label maps are 8-bit grayscale PNGs holding 0 (not anomaly), 1 (anomaly) and
255 (void); the optional remap table adapts any other published encoding at
load time. Score maps are either raw little-endian float32 payloads with a
"width height" text sidecar, or 16-bit grayscale PNGs mapped linearly onto
[0, 1]. Competitor masks are 8-bit grayscale PNGs where any nonzero pixel
counts as predicted.

All paths inside a manifest are resolved relative to the manifest's own
directory.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .connectivity import extract_components
from .errors import (
    BadEncoding,
    DimensionMismatch,
    EvalError,
    HeaderMismatch,
    UnsupportedFormat,
)
from .types import BinaryMask, EvalImage, Label, LabelMap, ScoreMap, Track

_VALID_LABELS = (int(Label.NOT_ANOMALY), int(Label.ANOMALY), int(Label.VOID))


@dataclass(frozen=True)
class ImageEntry:
    """One manifest row."""

    id: str
    label: str
    width: int
    height: int
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    track: Track
    images: tuple[ImageEntry, ...]
    root: Path
    label_remap: dict[int, int] | None = None

    def label_path(self, entry: ImageEntry) -> Path:
        return self.root / entry.label


def load_manifest(path, check_files: bool = True) -> DatasetManifest:
    """Parse a manifest JSON document and validate its structure."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    for key in ("name", "track", "images"):
        if key not in doc:
            raise EvalError(f"manifest is missing the {key!r} field")
    try:
        track = Track(doc["track"])
    except ValueError:
        raise EvalError(f"unknown track {doc['track']!r}") from None
    entries = []
    seen = set()
    for row in doc["images"]:
        entry = ImageEntry(
            id=str(row["id"]),
            label=str(row["label"]),
            width=int(row["width"]),
            height=int(row["height"]),
            tags=tuple(str(t) for t in row.get("tags", [])),
        )
        if entry.id in seen:
            raise EvalError(f"duplicate image id {entry.id!r} in manifest")
        seen.add(entry.id)
        entries.append(entry)
    remap = None
    if "label_remap" in doc:
        remap = {int(k): int(v) for k, v in doc["label_remap"].items()}
        bad = [v for v in remap.values() if v not in _VALID_LABELS]
        if bad:
            raise EvalError(f"label_remap maps onto invalid class value {bad[0]}")
    manifest = DatasetManifest(
        name=str(doc["name"]),
        track=track,
        images=tuple(entries),
        root=path.parent,
        label_remap=remap,
    )
    if check_files:
        for entry in manifest.images:
            p = manifest.label_path(entry)
            if not p.is_file():
                raise FileNotFoundError(f"label file {p} for image {entry.id!r} not found")
    return manifest


def load_label_map(path, remap: dict[int, int] | None = None) -> LabelMap:
    """Decode an 8-bit grayscale label PNG, applying the optional remap table."""
    with Image.open(path) as im:
        if im.mode != "L":
            raise UnsupportedFormat(
                f"label map {path} has mode {im.mode}; 8-bit grayscale required"
            )
        arr = np.asarray(im, dtype=np.uint8)
    if remap:
        lut = np.arange(256, dtype=np.uint8)
        for raw, cls in remap.items():
            lut[raw] = cls
        arr = lut[arr]
    valid = (arr == Label.NOT_ANOMALY) | (arr == Label.ANOMALY) | (arr == Label.VOID)
    if not valid.all():
        idx = int(np.flatnonzero(~valid.ravel())[0])
        raise BadEncoding(int(arr.ravel()[idx]), idx)
    return LabelMap(arr)


def save_label_map(path, labels: LabelMap) -> None:
    Image.fromarray(labels.labels, mode="L").save(path)


def _header_path(path: Path) -> Path:
    return path.with_suffix(".hdr")


def load_score_map(path) -> ScoreMap:
    """Load scores from a raw .f32 payload with sidecar header, or a 16-bit PNG."""
    path = Path(path)
    if path.suffix == ".f32":
        header = _header_path(path)
        try:
            width, height = (int(tok) for tok in header.read_text().split())
        except (ValueError, FileNotFoundError) as exc:
            raise HeaderMismatch(f"cannot read sidecar header {header}: {exc}") from exc
        data = np.fromfile(path, dtype="<f4")
        if data.size != width * height:
            raise HeaderMismatch(
                f"{path} holds {data.size} float32 values but header says "
                f"{width}x{height} = {width * height}"
            )
        return ScoreMap(data.reshape(height, width))
    if path.suffix == ".png":
        with Image.open(path) as im:
            if im.mode not in ("I", "I;16"):
                raise UnsupportedFormat(
                    f"score map {path} has mode {im.mode}; 16-bit grayscale required"
                )
            arr = np.asarray(im)
        if arr.min() < 0 or arr.max() > 65535:
            raise UnsupportedFormat(f"score map {path} exceeds the 16-bit range")
        return ScoreMap(arr.astype(np.float32) / np.float32(65535.0))
    raise UnsupportedFormat(f"unrecognized score file suffix {path.suffix!r}")


def save_score_map(path, scores: ScoreMap) -> None:
    """Write the raw .f32 payload and its sidecar header."""
    path = Path(path)
    if path.suffix != ".f32":
        raise UnsupportedFormat("score maps are saved as .f32 payloads")
    scores.scores.astype("<f4").tofile(path)
    _header_path(path).write_text(f"{scores.width} {scores.height}\n")


def save_score_map_png16(path, scores: ScoreMap) -> None:
    """Write scores as a 16-bit grayscale PNG; values are clipped to [0, 1]."""
    q = np.clip(scores.scores, 0.0, 1.0) * 65535.0 + 0.5
    Image.fromarray(q.astype(np.uint16)).save(path)


def load_mask(path) -> np.ndarray:
    """Decode a competitor mask PNG: 0 = not predicted, anything else = predicted."""
    with Image.open(path) as im:
        if im.mode != "L":
            raise UnsupportedFormat(
                f"mask {path} has mode {im.mode}; 8-bit grayscale required"
            )
        arr = np.asarray(im, dtype=np.uint8)
    return arr > 0


def save_mask(path, mask: np.ndarray) -> None:
    arr = np.where(np.asarray(mask, dtype=bool), np.uint8(255), np.uint8(0))
    Image.fromarray(arr, mode="L").save(path)


def find_score_file(directory, image_id: str) -> Path | None:
    """Locate the score file for one image: <id>.f32 preferred, then <id>.png."""
    directory = Path(directory)
    for suffix in (".f32", ".png"):
        candidate = directory / f"{image_id}{suffix}"
        if candidate.is_file():
            return candidate
    return None


def _load_one(manifest: DatasetManifest, entry: ImageEntry, scores_dir, masks_dir) -> EvalImage:
    labels = load_label_map(manifest.label_path(entry), manifest.label_remap)
    if (labels.height, labels.width) != (entry.height, entry.width):
        raise DimensionMismatch(
            f"label map for {entry.id!r} is {labels.width}x{labels.height} but the "
            f"manifest says {entry.width}x{entry.height}"
        )
    scores = None
    mask = None
    if scores_dir is not None:
        found = find_score_file(scores_dir, entry.id)
        if found is None:
            raise FileNotFoundError(f"no score file for image {entry.id!r} in {scores_dir}")
        scores = load_score_map(found)
        if (scores.height, scores.width) != (entry.height, entry.width):
            raise DimensionMismatch(
                f"score map for {entry.id!r} is {scores.width}x{scores.height} but the "
                f"manifest says {entry.width}x{entry.height}"
            )
    if masks_dir is not None:
        path = Path(masks_dir) / f"{entry.id}.png"
        if not path.is_file():
            raise FileNotFoundError(f"no mask file for image {entry.id!r} in {masks_dir}")
        arr = load_mask(path)
        if arr.shape != (entry.height, entry.width):
            raise DimensionMismatch(
                f"mask for {entry.id!r} is {arr.shape[1]}x{arr.shape[0]} but the "
                f"manifest says {entry.width}x{entry.height}"
            )
        mask = BinaryMask(arr)
    return EvalImage(id=entry.id, labels=labels, scores=scores, mask=mask, tags=entry.tags)


def load_eval_images(
    manifest: DatasetManifest,
    scores_dir=None,
    masks_dir=None,
    threads: int = 1,
) -> list[EvalImage]:
    """Load every manifest image with its scores and/or mask, in manifest order."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(
                ex.map(lambda e: _load_one(manifest, e, scores_dir, masks_dir), manifest.images)
            )
    return [_load_one(manifest, e, scores_dir, masks_dir) for e in manifest.images]


@dataclass(frozen=True)
class DatasetStats:
    """Table-style dataset properties."""

    anomaly_pixel_fraction: float
    not_anomaly_pixel_fraction: float
    image_count: int
    gt_component_count: int
    mean_relative_size: float
    std_relative_size: float

    def to_dict(self) -> dict:
        return {
            "anomaly_pixel_fraction": self.anomaly_pixel_fraction,
            "not_anomaly_pixel_fraction": self.not_anomaly_pixel_fraction,
            "image_count": self.image_count,
            "gt_component_count": self.gt_component_count,
            "mean_relative_size": self.mean_relative_size,
            "std_relative_size": self.std_relative_size,
        }


def dataset_stats(manifest: DatasetManifest) -> DatasetStats:
    """Pool pixel fractions and per-component relative sizes over the dataset.

    Fractions are over all pixels including void, so anomaly + not-anomaly
    can fall short of 1. Relative size is component pixels over that image's
    pixel count; the standard deviation is the population one.
    """
    anomaly_px = 0
    not_anomaly_px = 0
    total_px = 0
    relative = []
    for entry in manifest.images:
        labels = load_label_map(manifest.label_path(entry), manifest.label_remap)
        grid = labels.labels
        anomaly_px += int(np.count_nonzero(grid == Label.ANOMALY))
        not_anomaly_px += int(np.count_nonzero(grid == Label.NOT_ANOMALY))
        total_px += grid.size
        cs = extract_components(labels.anomaly_mask())
        if cs.count:
            relative.extend((cs.sizes / grid.size).tolist())
    rel = np.array(relative, dtype=np.float64)
    return DatasetStats(
        anomaly_pixel_fraction=anomaly_px / total_px,
        not_anomaly_pixel_fraction=not_anomaly_px / total_px,
        image_count=len(manifest.images),
        gt_component_count=rel.size,
        mean_relative_size=float(rel.mean()) if rel.size else 0.0,
        std_relative_size=float(rel.std()) if rel.size else 0.0,
    )


def validate_inputs(manifest: DatasetManifest, scores_dir=None, masks_dir=None) -> list[str]:
    """Collect every problem with a submission instead of stopping at the first.

    Returns human-readable findings; an empty list means the submission is
    loadable and dimensionally consistent with the manifest.
    """
    problems = []
    ids = {entry.id for entry in manifest.images}
    for entry in manifest.images:
        label_path = manifest.label_path(entry)
        if not label_path.is_file():
            problems.append(f"missing label file for image {entry.id!r}: {label_path}")
            continue
        try:
            labels = load_label_map(label_path, manifest.label_remap)
        except EvalError as exc:
            problems.append(f"label file for image {entry.id!r}: {exc}")
            continue
        if (labels.height, labels.width) != (entry.height, entry.width):
            problems.append(
                f"label map for {entry.id!r} is {labels.width}x{labels.height}, "
                f"manifest says {entry.width}x{entry.height}"
            )
    if scores_dir is not None:
        for entry in manifest.images:
            found = find_score_file(scores_dir, entry.id)
            if found is None:
                problems.append(f"missing score file for image {entry.id!r}")
                continue
            try:
                scores = load_score_map(found)
            except EvalError as exc:
                problems.append(f"score file for image {entry.id!r}: {exc}")
                continue
            if (scores.height, scores.width) != (entry.height, entry.width):
                problems.append(
                    f"score map for {entry.id!r} is {scores.width}x{scores.height}, "
                    f"manifest says {entry.width}x{entry.height}"
                )
    if masks_dir is not None:
        masks_dir = Path(masks_dir)
        for entry in manifest.images:
            path = masks_dir / f"{entry.id}.png"
            if not path.is_file():
                problems.append(f"missing mask file for image {entry.id!r}")
                continue
            try:
                arr = load_mask(path)
            except EvalError as exc:
                problems.append(f"mask file for image {entry.id!r}: {exc}")
                continue
            if arr.shape != (entry.height, entry.width):
                problems.append(
                    f"mask for {entry.id!r} is {arr.shape[1]}x{arr.shape[0]}, "
                    f"manifest says {entry.width}x{entry.height}"
                )
        for path in sorted(masks_dir.glob("*.png")):
            if path.stem not in ids:
                problems.append(f"mask file {path.name} matches no manifest image")
    return problems
