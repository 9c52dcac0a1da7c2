"""Benchmark evaluation for pixel-wise anomaly / road-obstacle segmentation.

Scores per-pixel anomaly predictions against three-class ground truth
(anomaly, not-anomaly, void): pooled pixel-level metrics (AuPRC, FPR at 95%
TPR, optimal F1 and its threshold), component-level metrics built on adjusted
IoU and PPV over a quality-threshold grid, default mask generation, dataset
statistics, subset and size-stratified breakdowns, plus a synthetic-scene
generator and brute-force oracles for self-verification.
"""

from .components import (
    ComponentReport,
    ComponentScores,
    GtScore,
    PredScore,
    SizeBin,
    TauStats,
    classify,
    evaluate_components,
    f1_at,
    plain_iou,
    ppv,
    siou,
    size_stratified,
)
from .connectivity import (
    EIGHT_CONNECTED,
    FOUR_CONNECTED,
    Component,
    ComponentSet,
    extract_components,
    filter_by_size,
    filter_mask_by_size,
    label_components,
)
from .dataset import (
    DatasetManifest,
    DatasetStats,
    ImageEntry,
    dataset_stats,
    load_eval_images,
    load_label_map,
    load_manifest,
    load_mask,
    load_score_map,
    save_label_map,
    save_mask,
    save_score_map,
    save_score_map_png16,
    validate_inputs,
)
from .errors import (
    BadEncoding,
    DimensionMismatch,
    EmptySubset,
    EvalError,
    HeaderMismatch,
    NoGroundTruthComponents,
    NoNegatives,
    NoPositives,
    NonFiniteScore,
    TooFewComponents,
    UnknownImage,
    UnsatisfiableSpec,
    UnsupportedFormat,
)
from .maskgen import MaskBundle, generate_masks, masks_from_external, single_mask
from .pixel import (
    PixelPool,
    PixelReport,
    PRCurve,
    auprc,
    fpr_at_tpr,
    optimal_f1_threshold,
    pixel_report,
    pool,
    pr_curve,
)
from .report import (
    BenchmarkReport,
    SweepPoint,
    SweepResult,
    delta_sweep,
    emit,
    evaluate,
    evaluate_subsets,
    report_to_dict,
)
from .synth import (
    OracleComponentReport,
    SceneSpec,
    generate_scene,
    oracle_component,
    oracle_pixel,
)
from .types import (
    ANOMALY,
    DEFAULT_MIN_COMPONENT_SIZE,
    NOT_ANOMALY,
    VOID,
    BinaryMask,
    EvalImage,
    Label,
    LabelMap,
    PixelTally,
    ScoreMap,
    Track,
    TrackConfig,
    default_tau_grid,
    validate_pair,
)

__version__ = "0.1.0"
