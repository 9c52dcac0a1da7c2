"""Core domain types: label maps, score maps, masks, and track configuration.

Ground truth is three-valued on purpose. Void is a first-class label so it can
never be silently folded into "not anomaly"; every consumer has to decide what
to do with it explicitly.

Score orientation is fixed: higher score = more anomalous. There is no
auto-flip heuristic anywhere in the engine.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteScore


class Label(enum.IntEnum):
    """Per-pixel ground-truth class."""

    NOT_ANOMALY = 0
    ANOMALY = 1
    VOID = 255


class Track(str, enum.Enum):
    """Benchmark track. Determines the default minimum predicted-component size."""

    ANOMALY = "anomaly"
    OBSTACLE = "obstacle"


#: Default minimum predicted-component size (pixels) per track. Components
#: strictly smaller than this are discarded from generated segmentations.
DEFAULT_MIN_COMPONENT_SIZE = {Track.ANOMALY: 500, Track.OBSTACLE: 50}

NOT_ANOMALY = Label.NOT_ANOMALY
ANOMALY = Label.ANOMALY
VOID = Label.VOID


def default_tau_grid() -> tuple[float, ...]:
    """The 11-point component-quality threshold grid 0.25, 0.30, ..., 0.75."""
    return tuple(round(0.25 + 0.05 * i, 2) for i in range(11))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LabelMap:
    """Per-pixel ground truth over {not-anomaly, anomaly, void} for one image.

    ``labels`` is a (height, width) uint8 grid holding ``Label`` values.
    Immutable after construction.
    """

    labels: np.ndarray

    def __post_init__(self):
        src = np.asarray(self.labels)
        if src.ndim != 2 or src.shape[0] < 1 or src.shape[1] < 1:
            raise ValueError(f"labels must be a non-empty 2-d grid, got shape {src.shape}")
        # Validate on the original values so e.g. an int32 256 cannot wrap
        # around to a legal 0 during the uint8 cast.
        valid = (src == Label.NOT_ANOMALY) | (src == Label.ANOMALY) | (src == Label.VOID)
        if not valid.all():
            idx = int(np.flatnonzero(~valid)[0])
            raise ValueError(f"invalid label value {src.ravel()[idx]} at flat index {idx}")
        arr = np.ascontiguousarray(src, dtype=np.uint8)
        object.__setattr__(self, "labels", _freeze(arr))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    @property
    def anomaly_count(self) -> int:
        return int((self.labels == Label.ANOMALY).sum())

    @property
    def void_count(self) -> int:
        return int((self.labels == Label.VOID).sum())

    def anomaly_mask(self) -> np.ndarray:
        return self.labels == Label.ANOMALY

    def void_mask(self) -> np.ndarray:
        return self.labels == Label.VOID

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelMap) and np.array_equal(self.labels, other.labels)


@dataclass(frozen=True)
class ScoreMap:
    """Per-pixel real-valued anomaly scores for one image (higher = more anomalous)."""

    scores: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.scores)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"scores must be a non-empty 2-d grid, got shape {arr.shape}")
        finite = np.isfinite(arr)
        if not finite.all():
            idx = int(np.flatnonzero(~finite.ravel())[0])
            raise NonFiniteScore(idx, float(arr.ravel()[idx]))
        object.__setattr__(self, "scores", _freeze(arr))

    @property
    def height(self) -> int:
        return self.scores.shape[0]

    @property
    def width(self) -> int:
        return self.scores.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.scores.shape


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel predicted anomaly decision (after thresholding / filtering)."""

    mask: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.mask, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"mask must be a non-empty 2-d grid, got shape {arr.shape}")
        object.__setattr__(self, "mask", _freeze(arr))

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def predicted_count(self) -> int:
        return int(self.mask.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryMask) and np.array_equal(self.mask, other.mask)


@dataclass(frozen=True)
class TrackConfig:
    """Evaluation knobs for one benchmark run.

    ``min_component_size`` filters generated segmentations (strict "smaller
    than" semantics: a component of exactly this size survives).
    ``score_mode`` selects the exact descending-threshold sweep or the
    memory-bounded histogram approximation.
    """

    track: Track = Track.ANOMALY
    min_component_size: int | None = None
    tau_grid: tuple[float, ...] = field(default_factory=default_tau_grid)
    score_mode: str = "exact"  # "exact" | "binned"
    score_bins: int = 4096
    filtering: bool = True

    def __post_init__(self):
        if self.min_component_size is None:
            object.__setattr__(
                self, "min_component_size", DEFAULT_MIN_COMPONENT_SIZE[self.track]
            )
        if self.min_component_size < 0:
            raise ValueError("min_component_size must be >= 0")
        taus = tuple(float(t) for t in self.tau_grid)
        if not taus:
            raise ValueError("tau_grid must be non-empty")
        if any(not (0.0 <= t < 1.0) for t in taus):
            raise ValueError("every tau must lie in [0, 1)")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("tau_grid must be strictly increasing")
        object.__setattr__(self, "tau_grid", taus)
        if self.score_mode not in ("exact", "binned"):
            raise ValueError(f"unknown score_mode {self.score_mode!r}")
        if self.score_mode == "binned" and self.score_bins < 2:
            raise ValueError("binned mode needs at least 2 bins")

    @property
    def effective_min_size(self) -> int:
        """Size filter actually applied: 0 when filtering is disabled."""
        return self.min_component_size if self.filtering else 0


@dataclass(frozen=True)
class PixelTally:
    """Pixel confusion counts at one threshold, void pixels excluded."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.fp + self.tn

    @property
    def precision(self) -> float:
        predicted = self.tp + self.fp
        return self.tp / predicted if predicted else 0.0

    @property
    def recall(self) -> float:
        return self.tp / self.positives if self.positives else 0.0

    @property
    def fpr(self) -> float:
        return self.fp / self.negatives if self.negatives else 0.0


@dataclass(frozen=True)
class EvalImage:
    """One dataset image ready for evaluation: ground truth plus scores or a mask."""

    id: str
    labels: LabelMap
    scores: ScoreMap | None = None
    mask: BinaryMask | None = None
    tags: tuple[str, ...] = ()


def validate_pair(labels: LabelMap, scores: ScoreMap) -> tuple[LabelMap, ScoreMap]:
    """Check that a (labels, scores) pair is evaluable together.

    Raises DimensionMismatch when the grids disagree; score finiteness is
    enforced by ScoreMap itself at construction.
    """
    if (labels.height, labels.width) != (scores.height, scores.width):
        raise DimensionMismatch(
            f"labels are {labels.width}x{labels.height} but scores are "
            f"{scores.width}x{scores.height}"
        )
    return labels, scores
