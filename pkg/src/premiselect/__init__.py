"""Premise selection engine and retrieval service for proof-assistant hammers.

Subpackage map: :mod:`.corpus` (data model and ingestion), :mod:`.encoder`
(trainable text encoder), :mod:`.trainer` (masked contrastive training),
:mod:`.index` (exact top-k retrieval with snapshot/delta caching),
:mod:`.mepo` (symbolic relevance-filter baseline), :mod:`.server` and
:mod:`.client` (JSON-over-HTTP retrieval service), :mod:`.orchestrator`
(simulated hammer pipeline), :mod:`.evaluation` and :mod:`.synthetic`
(metrics harness and planted-structure corpora).
"""

from .corpus import (
    Corpus,
    CorpusError,
    PremiseRecord,
    StateRecord,
    accessible_premises,
    filter_premises,
    load_corpus,
)
from .encoder import EncoderModel, Embedding, Tokenizer, encode, load_model, save_model, similarity
from .index import DeltaOverlay, IndexSnapshot, RetrievalResult, apply_delta, build_snapshot, select_premises
from .mepo import MepoConfig, SymbolSet, extract_symbols, mepo_select
from .orchestrator import (
    Goal,
    MockWorld,
    ProofOutcome,
    ProofTask,
    mock_backend,
    run_task,
    run_variant_suite,
)
from .trainer import TrainConfig, masked_contrastive_loss, sample_batch, train

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "CorpusError",
    "DeltaOverlay",
    "Embedding",
    "EncoderModel",
    "Goal",
    "IndexSnapshot",
    "MepoConfig",
    "MockWorld",
    "PremiseRecord",
    "ProofOutcome",
    "ProofTask",
    "RetrievalResult",
    "StateRecord",
    "SymbolSet",
    "TrainConfig",
    "Tokenizer",
    "accessible_premises",
    "apply_delta",
    "build_snapshot",
    "encode",
    "extract_symbols",
    "filter_premises",
    "load_corpus",
    "load_model",
    "masked_contrastive_loss",
    "mepo_select",
    "mock_backend",
    "run_task",
    "run_variant_suite",
    "sample_batch",
    "save_model",
    "select_premises",
    "similarity",
    "train",
]
