"""vistra: time series -> visibility graphs -> structural features -> labels.

The package turns sampled series into graphs whose edges encode which
samples can "see" each other (straight or arc-shaped sight lines with a
penetration tolerance), expands those graphs edge-adjacency-wise, embeds
them as stable label histograms, and classifies the result with a
deterministic random forest. A CLI (`vistra`) exposes each stage and a
config-driven end-to-end pipeline.
"""

from .classify import EvalReport, ForestModel, ForestParams, kfold_cv, rf_predict, rf_train, split_train_test
from .errors import DataFormatError, NumericOverflowError, PipelineStageError
from .features import FeatureMatrix, PcaModel, WlConfig, fuse, pca_fit, pca_fit_variance, pca_transform, wl_embed
from .graphs import DegreeDistribution, Graph, avg_clustering, degree_distribution, read_edgelist, sgn1, write_edgelist
from .io import SignalRecord, read_signal_records, validate_signals_file, write_signal_records
from .pipeline import PipelineConfig, run_pipeline
from .signals import (
    LORENZ_INIT,
    ROSSLER_INIT,
    MultiChannelSignal,
    PeakDetectParams,
    TimeSeries,
    add_awgn,
    derive_channels,
    gen_sinusoid,
    integrate_lorenz,
    integrate_rossler,
    peak_compress,
    segment,
)
from .visibility import ChordCircle, VgParams, arc_height, build_clpvg, build_lpvg, build_vg, chord_circle

__version__ = "0.1.0"

__all__ = [
    "ChordCircle",
    "DataFormatError",
    "DegreeDistribution",
    "EvalReport",
    "FeatureMatrix",
    "ForestModel",
    "ForestParams",
    "Graph",
    "LORENZ_INIT",
    "MultiChannelSignal",
    "NumericOverflowError",
    "PcaModel",
    "PeakDetectParams",
    "PipelineConfig",
    "PipelineStageError",
    "ROSSLER_INIT",
    "SignalRecord",
    "TimeSeries",
    "VgParams",
    "WlConfig",
    "add_awgn",
    "arc_height",
    "avg_clustering",
    "build_clpvg",
    "build_lpvg",
    "build_vg",
    "chord_circle",
    "degree_distribution",
    "derive_channels",
    "fuse",
    "gen_sinusoid",
    "integrate_lorenz",
    "integrate_rossler",
    "kfold_cv",
    "pca_fit",
    "pca_fit_variance",
    "pca_transform",
    "peak_compress",
    "read_edgelist",
    "read_signal_records",
    "rf_predict",
    "rf_train",
    "run_pipeline",
    "segment",
    "sgn1",
    "split_train_test",
    "validate_signals_file",
    "wl_embed",
    "write_edgelist",
    "write_signal_records",
    "__version__",
]
