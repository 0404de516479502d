"""Unsupervised image segmentation via signed min-cut on pixel lattices.

Images become 4-connected grid graphs whose signed edge weights encode
pixel similarity; the minimum cut is posed as a QUBO and handed to a
pluggable classical solver (exhaustive, simulated annealing or tabu
search).  Decoding, patch stitching, evaluation metrics, learned edge
weights and formulation-size accounting round out the pipeline.
"""

from .errors import (
    BandCountError,
    DimensionError,
    DivergenceError,
    FormatError,
    GridSegError,
    InvalidParameterError,
    TooLargeError,
    UndefinedValueError,
)
from .graph import (
    GridGraph,
    RasterImage,
    WeightConfig,
    gaussian_similarity,
    image_to_grid,
    load_edge_list,
    normalize_weights,
    save_edge_list,
    synthetic_grid,
)
from .metrics import MetricsReport, format_table, score, score_batch
from .pipeline import (
    PatchPlan,
    SegmentationMask,
    downscale,
    preprocess_flood,
    preprocess_forest,
    resolve_polarity,
    segment,
    segment_multiclass,
    segment_patched,
)
from .qubo import (
    QuboProblem,
    cut_value,
    energies,
    energy,
    export_qubo,
    import_qubo,
    mincut_to_qubo,
)
from .scalability import CSV_HEADER, FORMULATIONS, FormulationStats, compare_report, stats_for
from .solvers import (
    EXHAUSTIVE_MAX_VARS,
    Sample,
    SampleSet,
    SolverConfig,
    relative_error,
    solve,
    solve_exhaustive,
    solve_sa,
    solve_tabu,
)
from .weight_learn import (
    FEATURE_NAMES,
    WeightModel,
    apply_model,
    extract_pairs,
    grad_check,
    load_model,
    save_model,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BandCountError",
    "DimensionError",
    "DivergenceError",
    "EXHAUSTIVE_MAX_VARS",
    "FEATURE_NAMES",
    "FormatError",
    "CSV_HEADER",
    "FORMULATIONS",
    "FormulationStats",
    "GridGraph",
    "GridSegError",
    "InvalidParameterError",
    "MetricsReport",
    "PatchPlan",
    "QuboProblem",
    "RasterImage",
    "Sample",
    "SampleSet",
    "SegmentationMask",
    "SolverConfig",
    "TooLargeError",
    "UndefinedValueError",
    "WeightConfig",
    "WeightModel",
    "apply_model",
    "compare_report",
    "cut_value",
    "downscale",
    "energies",
    "energy",
    "export_qubo",
    "extract_pairs",
    "format_table",
    "gaussian_similarity",
    "grad_check",
    "image_to_grid",
    "import_qubo",
    "load_edge_list",
    "load_model",
    "mincut_to_qubo",
    "normalize_weights",
    "preprocess_flood",
    "preprocess_forest",
    "relative_error",
    "resolve_polarity",
    "save_edge_list",
    "save_model",
    "score",
    "score_batch",
    "segment",
    "segment_multiclass",
    "segment_patched",
    "solve",
    "solve_exhaustive",
    "solve_sa",
    "solve_tabu",
    "stats_for",
    "synthetic_grid",
    "train",
]
