"""Local Neighborhood Intensity Pattern texture descriptors and CBIR tooling."""

__version__ = "0.1.0"

from .descriptors import (FeatureVector, Kind, Window3x3, adjacency_set, center_threshold,
                          extract_feature, histogram, lbp_code, lnip_m_code, lnip_s_code,
                          magnitude_bit, mean_deviation, pattern_map, sign_bit)
from .errors import EmptyDatasetError, InvalidInputError, StoreParseError
from .evaluation import EvalReport, QueryScore, emit_curves, emit_report, evaluate, score_query
from .imaging import DatasetItem, load_dataset, read_image, tile, to_grayscale, untile
from .retrieval import (FeatureIndex, Hit, IndexEntry, RetrievalResult, build_index, load_index,
                        query, save_index)
from .similarity import Metric, distance, distances

__all__ = [
    "DatasetItem", "EmptyDatasetError", "EvalReport", "FeatureIndex", "FeatureVector", "Hit",
    "IndexEntry", "InvalidInputError", "Kind", "Metric", "QueryScore", "RetrievalResult",
    "StoreParseError", "Window3x3", "adjacency_set", "build_index", "center_threshold",
    "distance", "distances", "emit_curves", "emit_report", "evaluate", "extract_feature",
    "histogram", "lbp_code", "lnip_m_code", "lnip_s_code", "load_dataset", "load_index",
    "magnitude_bit", "mean_deviation", "pattern_map", "query", "read_image", "save_index",
    "score_query", "sign_bit", "tile", "to_grayscale", "untile",
]
