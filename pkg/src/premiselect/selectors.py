"""Uniform text-based selector interface shared by the server and the harness.

A selector maps ``(state_text, candidate_names, k)`` to at most k ranked
names (best first). Four flavors: neural retrieval over an index snapshot,
the symbolic relevance filter, a seeded random permutation, and an oracle
that ranks planted ground-truth premises first.
"""

from __future__ import annotations

import hashlib
from typing import Callable, Mapping, Sequence

import numpy as np

from . import mepo
from .corpus import Corpus
from .encoder import EncoderModel, encode
from .index import DeltaOverlay, IndexSnapshot, select_premises

TextSelector = Callable[[str, Sequence[str], int], list[str]]

SELECTOR_KINDS = ("neural", "mepo", "random", "oracle")


def neural_selector(
    model: EncoderModel,
    snapshot: IndexSnapshot,
    overlay: DeltaOverlay | None = None,
) -> TextSelector:
    def select(state_text: str, candidates: Sequence[str], k: int) -> list[str]:
        emb = encode(model, state_text)
        result = select_premises(emb, k, candidates, snapshot, overlay)
        return list(result.names)

    return select


def mepo_selector(
    signatures: Mapping[str, str],
    config: mepo.MepoConfig = mepo.MepoConfig(),
) -> TextSelector:
    symbol_cache: dict[str, mepo.SymbolSet] = {}

    def symbols_of(name: str) -> mepo.SymbolSet:
        if name not in symbol_cache:
            symbol_cache[name] = mepo.extract_symbols(signatures[name])
        return symbol_cache[name]

    def select(state_text: str, candidates: Sequence[str], k: int) -> list[str]:
        goal = mepo.extract_symbols(state_text)
        pairs = [(name, symbols_of(name)) for name in candidates]
        accepted = mepo.mepo_select(goal, pairs, config)
        # Late acceptances are the most relevant: keep the final k, best first.
        return list(reversed(mepo.take_final(accepted, k)))

    return select


def random_selector(seed: int = 0) -> TextSelector:
    """Uniform permutation of the candidates, deterministic per (seed, state)."""

    def select(state_text: str, candidates: Sequence[str], k: int) -> list[str]:
        digest = hashlib.sha256(f"{seed}:{state_text}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        order = rng.permutation(len(candidates))
        return [candidates[int(i)] for i in order[: max(k, 0)]]

    return select


def oracle_selector(positives_by_state: Mapping[str, frozenset[str]]) -> TextSelector:
    """Ranks a state's ground-truth premises first (sorted), then the rest."""

    def select(state_text: str, candidates: Sequence[str], k: int) -> list[str]:
        positives = positives_by_state.get(state_text, frozenset())
        first = sorted(n for n in candidates if n in positives)
        rest = [n for n in candidates if n not in positives]
        return (first + rest)[: max(k, 0)]

    return select


def oracle_from_corpus(corpus: Corpus) -> TextSelector:
    return oracle_selector({s.state_text: s.positive_premises for s in corpus.states})
