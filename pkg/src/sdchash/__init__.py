"""Learning binary hash codes whose pairwise similarities follow a calibrated target distribution."""

from .analysis import build_histogram, collapse_report, intersection_score, sample_pairs
from .baselines import ItqModel, encode_itq, fit_itq, fit_lsh
from .calibration import (
    BetaDistribution,
    BinomialBucketDistribution,
    beta_icdf,
    binomial_bucket_icdf,
    binomial_bucket_pmf,
    calibration_targets,
    icdf_to_similarity,
    regularized_incomplete_beta,
)
from .dataio import FeatureMatrix, SyntheticSpec, generate_synthetic, read_features, write_features
from .hashing import HashModel, PackedCodes, encode, forward, init_model, pack, sign_codes, unpack
from .losses import (
    LossValueAndGrad,
    SimilarityBatch,
    build_pair_batch,
    contrastive_loss,
    preservation_loss,
    quantization_loss,
    sdc_loss,
    total_loss,
)
from .retrieval import average_precision, evaluate, hamming_distance, search_topk
from .trainer import TrainConfig, TrainReport, encode_dataset, train

__version__ = "0.1.0"

__all__ = [
    "average_precision",
    "beta_icdf",
    "BetaDistribution",
    "binomial_bucket_icdf",
    "binomial_bucket_pmf",
    "BinomialBucketDistribution",
    "build_histogram",
    "build_pair_batch",
    "calibration_targets",
    "collapse_report",
    "contrastive_loss",
    "encode",
    "encode_dataset",
    "encode_itq",
    "evaluate",
    "FeatureMatrix",
    "fit_itq",
    "fit_lsh",
    "forward",
    "generate_synthetic",
    "hamming_distance",
    "HashModel",
    "icdf_to_similarity",
    "init_model",
    "intersection_score",
    "ItqModel",
    "LossValueAndGrad",
    "pack",
    "PackedCodes",
    "preservation_loss",
    "quantization_loss",
    "read_features",
    "regularized_incomplete_beta",
    "sample_pairs",
    "sdc_loss",
    "search_topk",
    "sign_codes",
    "SimilarityBatch",
    "SyntheticSpec",
    "total_loss",
    "train",
    "TrainConfig",
    "TrainReport",
    "unpack",
    "write_features",
]
