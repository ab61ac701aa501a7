"""Text-specific word proposals via grouped extremal regions."""

from .evaluation import (
    GroundTruth,
    GtBox,
    RecallCurve,
    iou,
    recall_at,
    recall_curves,
    rotate_image,
    rotate_item,
    synth_corpus,
)
from .features import RegionFeatures, compute_features
from .grouping import CueSpace, DendroNode, Dendrogram, build_dendrogram, slc_distance
from .imaging import BitMask, RasterChannel, extract_channels, gradient_magnitude, l1_distance_transform
from .pipeline import Proposal, TextProposer, count_hierarchies, ranked_proposals
from .ranking import StumpBoostRanker, TrainingSample, group_features, load_model, mine_training_samples, save_model
from .segmentation import MserParams, Region, extract_regions
from .validation import DataError, InvalidInputError
from .wordspot import OracleRecognizer, Recognizer, WordDetection, spot_words

__version__ = "0.1.0"

__all__ = [
    "BitMask",
    "CueSpace",
    "DataError",
    "DendroNode",
    "Dendrogram",
    "GroundTruth",
    "GtBox",
    "InvalidInputError",
    "MserParams",
    "OracleRecognizer",
    "Proposal",
    "RasterChannel",
    "RecallCurve",
    "Recognizer",
    "Region",
    "RegionFeatures",
    "StumpBoostRanker",
    "TextProposer",
    "TrainingSample",
    "WordDetection",
    "build_dendrogram",
    "compute_features",
    "count_hierarchies",
    "extract_channels",
    "extract_regions",
    "gradient_magnitude",
    "group_features",
    "iou",
    "l1_distance_transform",
    "load_model",
    "mine_training_samples",
    "ranked_proposals",
    "recall_at",
    "recall_curves",
    "rotate_image",
    "rotate_item",
    "save_model",
    "slc_distance",
    "spot_words",
    "synth_corpus",
]
