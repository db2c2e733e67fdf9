"""Video event-recognition toolkit: motion-driven key-frame selection,
optical-flow feature images, and multi-tier fusion of classifier outputs."""

from .conflation import ProbDist, biased_conflate, bhattacharyya_distance, conflate
from .config import ConfigError, PipelineConfig, load_fusion_plan
from .frames_io import FrameIngestError, ingest_frame_sequence, write_gray_image
from .fusion_engine import (AccuracyReport, ClassStats, FusionPlan, FusionTrace,
                            PredictionBundle, cross_fuse, evaluate_accuracy,
                            multi_tier_fuse, predict_class, self_fuse)
from .keyframe_select import (FrameGraph, SelectionResult, build_frame_graph,
                              compute_d_low, select_keyframes)
from .motion_features import (DisparitySeries, HistogramConfig, MotionHistogram,
                              motion_histogram, reduce_redundancy,
                              redundancy_threshold, temporal_disparity)
from .optical_flow import (FlowField, FlowParams, Frame, compute_dense_flow,
                           magnitude_image)
from .records import (PredictionRecord, RecordParseError, group_into_bundles,
                      parse_prediction_records, write_prediction_records)

__version__ = "0.1.0"

__all__ = [
    "ProbDist", "conflate", "bhattacharyya_distance", "biased_conflate",
    "Frame", "FlowParams", "FlowField", "compute_dense_flow", "magnitude_image",
    "HistogramConfig", "MotionHistogram", "DisparitySeries",
    "motion_histogram", "temporal_disparity", "redundancy_threshold",
    "reduce_redundancy",
    "FrameGraph", "SelectionResult", "compute_d_low", "build_frame_graph",
    "select_keyframes",
    "FusionPlan", "FusionTrace", "PredictionBundle", "cross_fuse", "self_fuse",
    "multi_tier_fuse", "predict_class", "ClassStats", "AccuracyReport",
    "evaluate_accuracy",
    "PredictionRecord", "RecordParseError", "parse_prediction_records",
    "write_prediction_records", "group_into_bundles",
    "FrameIngestError", "ingest_frame_sequence", "write_gray_image",
    "ConfigError", "PipelineConfig", "load_fusion_plan",
    "__version__",
]
