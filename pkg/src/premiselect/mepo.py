"""Symbolic relevance-filter baseline over shared-symbol marks.

Classic mark-and-threshold iteration: keep a growing set R of relevant
symbols (seeded from the goal), accept premises whose mark
``|sym & R| / (|sym & R| + w * |sym - R|)`` clears the threshold, fold their
symbols into R, raise the threshold, repeat. The irrelevance weight w is
fixed to 1 here; there is no global symbol-frequency table at this scale.

With the tuned defaults p=0.6 and c=0.9 the second-round threshold already
exceeds 1, so effectively a single acceptance round runs. When a caller asks
for k premises it gets the *last* k accepted: late acceptances are the most
relevant ones under this scheme.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*(?:\.[A-Za-z_][A-Za-z0-9_']*)*")

#: Universe/keyword tokens that look like constants but carry no relevance signal.
_EXCLUDED = frozenset({"Type", "Prop", "Sort"})


@dataclass(frozen=True)
class SymbolSet:
    """Constant-like symbols extracted from normalized goal or signature text."""

    symbols: frozenset[str]

    def __len__(self) -> int:
        return len(self.symbols)


def extract_symbols(text: str) -> SymbolSet:
    """Dotted identifiers plus capitalized constants (length >= 2), keywords dropped."""
    found = set()
    for chain in _IDENT_RE.findall(text):
        if chain in _EXCLUDED:
            continue
        if "." in chain or (chain[0].isupper() and len(chain) >= 2):
            found.add(chain)
    return SymbolSet(frozenset(found))


@dataclass(frozen=True)
class MepoConfig:
    p: float = 0.6  # initial relevance threshold
    c: float = 0.9  # threshold-growth divisor: t <- t + (1 - t) / c
    max_selected: int | None = None

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must be in (0, 1]")
        if self.c <= 0.0:
            raise ValueError("c must be positive")


def mark(symbols: SymbolSet, relevant: frozenset[str] | set[str], w: float = 1.0) -> float:
    inter = len(symbols.symbols & relevant)
    if inter == 0:
        return 0.0
    outside = len(symbols.symbols - relevant)
    return inter / (inter + w * outside)


@dataclass(frozen=True)
class MepoSelection:
    names: tuple[str, ...]  # acceptance order, earliest first
    rounds: tuple[tuple[str, ...], ...]  # names grouped by acceptance round
    thresholds: tuple[float, ...]  # threshold used in each acceptance round


def mepo_select_detailed(
    goal: SymbolSet,
    premises: Sequence[tuple[str, SymbolSet]],
    config: MepoConfig = MepoConfig(),
) -> MepoSelection:
    relevant: set[str] = set(goal.symbols)
    remaining = list(premises)
    accepted: list[str] = []
    rounds: list[tuple[str, ...]] = []
    thresholds: list[float] = []
    threshold = config.p
    while remaining:
        round_names: list[str] = []
        round_symbols: set[str] = set()
        still: list[tuple[str, SymbolSet]] = []
        full = False
        for name, symbols in remaining:
            if not full and mark(symbols, relevant) >= threshold:
                round_names.append(name)
                round_symbols |= symbols.symbols
                if config.max_selected is not None and len(accepted) + len(round_names) >= config.max_selected:
                    full = True
            else:
                still.append((name, symbols))
        if not round_names:
            break
        accepted.extend(round_names)
        rounds.append(tuple(round_names))
        thresholds.append(threshold)
        if full:
            break
        relevant |= round_symbols
        remaining = still
        threshold = threshold + (1.0 - threshold) / config.c
    return MepoSelection(names=tuple(accepted), rounds=tuple(rounds), thresholds=tuple(thresholds))


def mepo_select(
    goal: SymbolSet,
    premises: Sequence[tuple[str, SymbolSet]],
    config: MepoConfig = MepoConfig(),
) -> list[str]:
    """Accepted premise names in acceptance order (earliest first)."""
    return list(mepo_select_detailed(goal, premises, config).names)


def take_final(names: Sequence[str], k: int) -> list[str]:
    """The last k accepted premises: the most relevant under this filter."""
    if k <= 0:
        return []
    return list(names[-k:])
