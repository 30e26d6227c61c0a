from __future__ import annotations

from pathlib import Path

import pytest

from premiselect.corpus import Corpus, filter_premises, load_corpus
from premiselect.encoder import EncoderModel, build_tokenizer, init_model
from premiselect.synthetic import SyntheticSpec, SyntheticWorld, generate_synthetic
from premiselect.trainer import TrainConfig, train

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="session")
def mem_corpus_raw() -> Corpus:
    return load_corpus(FIXTURES / "mem_domain.jsonl")


@pytest.fixture(scope="session")
def mem_corpus(mem_corpus_raw: Corpus) -> Corpus:
    return filter_premises(mem_corpus_raw)


@pytest.fixture(scope="session")
def gcd_corpus() -> Corpus:
    return filter_premises(load_corpus(FIXTURES / "gcd_corpus.jsonl"))


@pytest.fixture(scope="session")
def gcd_model(gcd_corpus: Corpus) -> EncoderModel:
    """Small deterministic model trained on the gcd fixture corpus."""
    config = TrainConfig(
        batch_size=8, negatives_per_pair=3, temperature=0.05,
        learning_rate=0.05, steps=120, seed=5, dim=32, max_len=128,
    )
    return train(gcd_corpus, config).model


@pytest.fixture(scope="session")
def small_synth() -> tuple[Corpus, SyntheticWorld]:
    return generate_synthetic(SyntheticSpec(num_premises=60, num_states=40, seed=11))


@pytest.fixture(scope="session")
def synth_model(small_synth) -> EncoderModel:
    """Untrained model over the synthetic vocabulary (random but distinct rows)."""
    corpus, _ = small_synth
    texts = [p.signature for p in corpus.premises] + [s.state_text for s in corpus.states]
    return init_model(build_tokenizer(texts), dim=48, seed=3)
