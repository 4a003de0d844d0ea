"""Two-stage hostility detection pipeline for short social-media posts."""

from .corpus import (
    Corpus,
    LabeledPost,
    LabelVector,
    SplitStats,
    encode_labels,
    parse_corpus,
    preprocess_post,
    split_stats,
    write_corpus,
)
from .embeddings import AlignedDataset, EmbeddingStore, align, read_store, write_store
from .ensemble import EnsembleWeights, ModelOutputs, combine, enforce_cascade, fine_weight
from .errors import DimensionError, InputError, IntegrityError, PipelineError
from .gbdt import Booster, BoosterSet, GbdtConfig, fit_booster, fit_one_vs_rest, fit_tree
from .metrics import EvalReport, evaluate, report_table
from .mlp import MlpModel, TrainConfig, extract_finetuned, init_mlp, predict, train_mlp
from .pipeline import ExperimentConfig, reproduce_all, run_submission

__version__ = "0.1.0"
