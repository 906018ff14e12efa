"""Transfer learning for mean-function estimation from discretely sampled curves.

The package estimates the mean function of a target population of random
curves observed with noise at discrete design points, optionally borrowing
strength from source populations whose means differ from the target by a
smoother function.  It provides the randomized local polynomial estimator
with thresholding, conventional and transfer fits, adaptive train/test
selection with bagging for both common and independent sampling designs,
a simulation generator, risk metrics, and an experiment CLI.
"""

from .model import (
    DesignKind,
    DesignRegularity,
    Observation,
    ObservationSet,
    SampleBundle,
    SampleSizes,
    SmoothnessSpec,
    holder_floor,
    validate_bundle,
)
from .localpoly import FitParams, PiecewisePoly, ReducedInterval
from .transfer import (
    TransferEstimate,
    TransferParams,
    fit_cl,
    fit_tl,
    theoretical_params_common,
    theoretical_params_independent,
)
from .adaptive import (
    AdaptiveFit,
    BaggedEstimate,
    Candidate,
    SplitIndices,
    bagged,
    run_alc,
    run_ali,
    split,
)
from .simgen import (
    MeanSpec,
    NoiseSpec,
    brownian_at,
    common_design_points,
    generate_bundle,
    independent_design_points,
    benchmark_source,
    benchmark_target,
)
from .metrics import RiskSummary, imse, rate_slope, summarize

__version__ = "0.1.0"

__all__ = [
    "DesignKind",
    "DesignRegularity",
    "Observation",
    "ObservationSet",
    "SampleBundle",
    "SampleSizes",
    "SmoothnessSpec",
    "holder_floor",
    "validate_bundle",
    "FitParams",
    "PiecewisePoly",
    "ReducedInterval",
    "TransferEstimate",
    "TransferParams",
    "fit_cl",
    "fit_tl",
    "theoretical_params_common",
    "theoretical_params_independent",
    "AdaptiveFit",
    "BaggedEstimate",
    "Candidate",
    "SplitIndices",
    "bagged",
    "run_alc",
    "run_ali",
    "split",
    "MeanSpec",
    "NoiseSpec",
    "brownian_at",
    "common_design_points",
    "generate_bundle",
    "independent_design_points",
    "benchmark_source",
    "benchmark_target",
    "RiskSummary",
    "imse",
    "rate_slope",
    "summarize",
]
