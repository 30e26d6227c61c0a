"""Contrastive training of the encoder on (state, positive-premise) pairs.

Each batch holds B pairs plus B- sampled negatives per pair. Every premise in
the batch serves as a candidate for every state, except that a state's own
ground-truth premises are masked out of its denominator: premises shared by
many proofs would otherwise be punished as false negatives. The per-example
term is the negative log-probability of the positive under a softmax at
temperature tau over {positive} + masked negatives.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus, StateRecord, iter_state_positions
from .encoder import (
    EncoderModel,
    ParamGrads,
    build_tokenizer,
    encode,
    encode_batch_with_grads,
    init_model,
    with_parameters,
)


class EmptyCorpusError(ValueError):
    """No (state, positive) pair is available to train on."""


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, step: int, loss: float):
        self.step = step
        self.loss = loss
        super().__init__(f"non-finite loss {loss!r} at step {step}")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 256
    negatives_per_pair: int = 3
    temperature: float = 0.05
    learning_rate: float = 2e-4
    steps: int = 1000
    seed: int = 0
    dim: int = 64
    max_len: int = 256

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.negatives_per_pair < 0:
            raise ValueError("negatives_per_pair must be >= 0")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


@dataclass(frozen=True)
class PairIndex:
    """Precomputed sampling structures for one corpus."""

    states: tuple[StateRecord, ...]
    pairs: tuple[tuple[int, str], ...]  # (state index, positive premise name)
    negative_pools: tuple[tuple[str, ...], ...]  # accessible minus positives, per state
    signatures: dict[str, str]

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "PairIndex":
        states: list[StateRecord] = []
        pairs: list[tuple[int, str]] = []
        pools: list[tuple[str, ...]] = []
        for state, accessible in iter_state_positions(corpus):
            if not state.positive_premises:
                continue
            idx = len(states)
            states.append(state)
            pairs.extend((idx, name) for name in sorted(state.positive_premises))
            pools.append(tuple(n for n in accessible if n not in state.positive_premises))
        return cls(
            states=tuple(states),
            pairs=tuple(pairs),
            negative_pools=tuple(pools),
            signatures={p.name: p.signature for p in corpus.premises},
        )


@dataclass(frozen=True)
class TrainBatch:
    """Sampled pairs, sampled negatives, and the per-example denominator sets."""

    states: tuple[StateRecord, ...]
    positives: tuple[str, ...]
    negatives: tuple[tuple[str, ...], ...]
    positive_sets: tuple[frozenset[str], ...]
    signatures: dict[str, str]
    masks: tuple[tuple[str, ...], ...] = field(init=False)
    negative_shortfall: int = 0

    def __post_init__(self):
        batch_premises = set(self.positives)
        for negs in self.negatives:
            batch_premises.update(negs)
        masks = tuple(
            tuple(sorted(batch_premises - pos_set)) for pos_set in self.positive_sets
        )
        object.__setattr__(self, "masks", masks)

    def __len__(self) -> int:
        return len(self.states)


def extract_pairs(corpus: Corpus) -> list[tuple[StateRecord, str]]:
    """All (state, positive premise) training pairs, in deterministic order."""
    return [
        (s, name)
        for s in corpus.states
        for name in sorted(s.positive_premises)
    ]


def sample_batch(
    corpus: Corpus | PairIndex,
    config: TrainConfig,
    rng: np.random.Generator,
) -> TrainBatch:
    """Sample B pairs uniformly, then B- negatives per pair without replacement.

    Negatives come from the state's accessible pool minus its positives. If a
    pool is smaller than B-, the batch records the shortfall instead of
    failing.
    """
    index = corpus if isinstance(corpus, PairIndex) else PairIndex.from_corpus(corpus)
    if not index.pairs:
        raise EmptyCorpusError("corpus has no state with a positive premise")
    picks = rng.integers(0, len(index.pairs), size=config.batch_size)
    states: list[StateRecord] = []
    positives: list[str] = []
    negatives: list[tuple[str, ...]] = []
    shortfall = 0
    for pick in picks:
        state_idx, pos_name = index.pairs[int(pick)]
        states.append(index.states[state_idx])
        positives.append(pos_name)
        pool = index.negative_pools[state_idx]
        take = min(config.negatives_per_pair, len(pool))
        shortfall += config.negatives_per_pair - take
        if take:
            chosen = rng.choice(len(pool), size=take, replace=False)
            negatives.append(tuple(pool[int(c)] for c in chosen))
        else:
            negatives.append(())
    return TrainBatch(
        states=tuple(states),
        positives=tuple(positives),
        negatives=tuple(negatives),
        positive_sets=tuple(s.positive_premises for s in states),
        signatures=index.signatures,
        negative_shortfall=shortfall,
    )


@dataclass(frozen=True)
class LossReport:
    loss: float
    per_example: tuple[float, ...]
    grad_norm: float


def per_example_loss(positive_sim: float, negative_sims: Sequence[float], temperature: float) -> float:
    """-log softmax probability of the positive, via max-subtracted log-sum-exp."""
    z = np.concatenate(([positive_sim], np.asarray(negative_sims, dtype=np.float64))) / temperature
    m = float(z.max())
    lse = m + math.log(float(np.sum(np.exp(z - m))))
    return lse - float(z[0])


def loss_and_gradients(
    model: EncoderModel,
    batch: TrainBatch,
    temperature: float,
) -> tuple[LossReport, ParamGrads]:
    """Masked contrastive loss plus exact parameter gradients."""
    needed = set(batch.positives)
    for mask in batch.masks:
        needed.update(mask)
    texts: dict[str, np.ndarray] = {}
    for name in needed:
        sig = batch.signatures[name]
        if sig not in texts:
            texts[sig] = encode(model, sig).vector
    for state in batch.states:
        if state.state_text not in texts:
            texts[state.state_text] = encode(model, state.state_text).vector

    upstream: dict[str, np.ndarray] = {t: np.zeros(model.dim) for t in texts}
    scale = 1.0 / (len(batch) * temperature)
    per_example: list[float] = []
    for i, state in enumerate(batch.states):
        s_vec = texts[state.state_text]
        pos_sig = batch.signatures[batch.positives[i]]
        cand_sigs = [pos_sig] + [batch.signatures[n] for n in batch.masks[i]]
        cand = np.stack([texts[sig] for sig in cand_sigs])
        z = cand @ s_vec / temperature
        m = float(z.max())
        lse = m + math.log(float(np.sum(np.exp(z - m))))
        per_example.append(lse - float(z[0]))
        probs = np.exp(z - lse)
        coeff = probs.copy()
        coeff[0] -= 1.0
        upstream[state.state_text] += scale * (coeff @ cand)
        for sig, c in zip(cand_sigs, coeff):
            upstream[sig] += scale * c * s_vec

    ordered = list(texts)
    grads = encode_batch_with_grads(model, ordered, [upstream[t] for t in ordered])
    report = LossReport(
        loss=float(np.mean(per_example)),
        per_example=tuple(per_example),
        grad_norm=grads.norm(),
    )
    return report, grads


def masked_contrastive_loss(model: EncoderModel, batch: TrainBatch, temperature: float) -> LossReport:
    report, _ = loss_and_gradients(model, batch, temperature)
    return report


@dataclass(frozen=True)
class StepStats:
    step: int
    loss: float
    grad_norm: float


@dataclass(frozen=True)
class TrainResult:
    model: EncoderModel
    curve: tuple[StepStats, ...]
    negative_shortfall: int


def train(corpus: Corpus, config: TrainConfig) -> TrainResult:
    """SGD at a fixed learning rate on the masked contrastive loss.

    Deterministic under ``config.seed``. Premises are re-encoded every step
    (no stale embedding cache) so the gradients stay exact. Raises
    :class:`TrainingDivergedError` if the loss leaves the finite range.
    """
    vocab_texts = [p.signature for p in corpus.premises] + [s.state_text for s in corpus.states]
    tokenizer = build_tokenizer(vocab_texts, max_len=config.max_len)
    base = init_model(tokenizer, dim=config.dim, seed=config.seed)
    if config.steps == 0:
        return TrainResult(model=base, curve=(), negative_shortfall=0)

    index = PairIndex.from_corpus(corpus)
    rng = np.random.default_rng(config.seed)
    table = base.embedding_table.copy()
    proj = base.projection.copy()
    curve: list[StepStats] = []
    shortfall = 0
    for step in range(1, config.steps + 1):
        batch = sample_batch(index, config, rng)
        shortfall += batch.negative_shortfall
        view = with_parameters(base, table, proj, version=f"training-step-{step}")
        report, grads = loss_and_gradients(view, batch, config.temperature)
        if not math.isfinite(report.loss):
            raise TrainingDivergedError(step, report.loss)
        table -= config.learning_rate * grads.embedding_table
        proj -= config.learning_rate * grads.projection
        curve.append(StepStats(step=step, loss=report.loss, grad_norm=report.grad_norm))
    final = EncoderModel.create(tokenizer, table, proj)
    return TrainResult(model=final, curve=tuple(curve), negative_shortfall=shortfall)


def write_loss_curve(curve: Sequence[StepStats], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss", "grad_norm"])
        for row in curve:
            writer.writerow([row.step, repr(row.loss), repr(row.grad_norm)])
