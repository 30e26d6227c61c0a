"""Synthetic corpora with planted relevance structure.

Desk-scale substitute for a real proof-assistant export: every premise owns a
few unique constant-like symbols, and every state's text embeds symbols of
its planted positive premises plus noise. That gives a lexical signal the
encoder can actually learn, a symbol overlap the relevance-filter baseline
can exploit, and entailment tables that make each theorem provable by the
mock prover from a planted minimal core.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .corpus import Corpus, PremiseRecord, StateRecord, compute_snapshot_id, corpus_to_jsonl
from .orchestrator import Goal, MockWorld, goal_from_json, goal_to_json, world_from_json, world_to_json


@dataclass(frozen=True)
class SyntheticSpec:
    num_premises: int = 200
    num_states: int = 400
    symbols_per_premise: int = 3
    positives_per_state_mean: float = 12.45
    noise_tokens: int = 4
    num_lib_modules: int = 8
    num_theorem_modules: int = 4
    untranslatable: int = 0  # first N theorems: translation fails
    unprovable: int = 0  # next N theorems: no entailment listed
    reconstruction_poison: int = 0  # next N theorems: reconstruction fails
    seed: int = 0


@dataclass(frozen=True)
class TheoremMeta:
    proof_lines: int
    num_positives: int


@dataclass(frozen=True)
class SyntheticWorld:
    """Mock-prover tables and per-theorem metadata for a generated corpus."""

    world: MockWorld
    goals: dict[str, Goal]  # theorem name -> toy goal
    minimal_cores: dict[str, frozenset[str]]
    theorem_meta: dict[str, TheoremMeta]


def goal_for_theorem(theorem_name: str) -> Goal:
    return Goal.atom(f"goal:{theorem_name}")


def generate_synthetic(spec: SyntheticSpec) -> tuple[Corpus, SyntheticWorld]:
    """Deterministic under ``spec.seed``: same spec, same corpus bytes."""
    rng = np.random.default_rng(spec.seed)
    lib_modules = [f"Lib.M{m:02d}" for m in range(spec.num_lib_modules)]
    thm_modules = [f"Thm.T{m:02d}" for m in range(spec.num_theorem_modules)]
    modules: dict[str, tuple[str, ...]] = {}
    for i, m in enumerate(lib_modules):
        modules[m] = (lib_modules[i - 1],) if i > 0 else ()
    for m in thm_modules:
        modules[m] = (lib_modules[-1],)

    premises: list[PremiseRecord] = []
    premise_symbols: list[list[str]] = []
    per_module_count = [0] * spec.num_lib_modules
    for i in range(spec.num_premises):
        symbols = [f"Sym{i}x{j}" for j in range(spec.symbols_per_premise)]
        premise_symbols.append(symbols)
        module_idx = i % spec.num_lib_modules
        premises.append(
            PremiseRecord(
                name=f"Lib.lemma{i:04d}",
                kind="theorem" if i % 5 else "definition",
                signature=f"theorem Lib.lemma{i:04d} : {' '.join(symbols)}",
                docstring=None,
                module=lib_modules[module_idx],
                decl_index=per_module_count[module_idx],
            )
        )
        per_module_count[module_idx] += 1

    noise_pool = [f"noise{t:02d}" for t in range(40)]
    states: list[StateRecord] = []
    goals: dict[str, Goal] = {}
    cores: dict[str, frozenset[str]] = {}
    meta: dict[str, TheoremMeta] = {}
    entailment: dict[str, tuple[frozenset[str], ...]] = {}
    untranslatable: set[str] = set()
    poison: set[str] = set()
    per_thm_module_count = [0] * spec.num_theorem_modules

    for j in range(spec.num_states):
        theorem = f"Thm.theorem{j:04d}"
        count = int(min(1 + rng.poisson(max(spec.positives_per_state_mean - 1.0, 0.0)), spec.num_premises))
        picked = sorted(int(p) for p in rng.choice(spec.num_premises, size=count, replace=False))
        positives = frozenset(premises[p].name for p in picked)

        mention: list[str] = []
        for p in picked:
            syms = premise_symbols[p]
            take = min(2, len(syms))
            chosen = rng.choice(len(syms), size=take, replace=False)
            mention.extend(syms[int(c)] for c in chosen)
        noise = [noise_pool[int(n)] for n in rng.integers(0, len(noise_pool), size=spec.noise_tokens)]
        words = mention + noise
        rng.shuffle(words)
        state_text = f"case {theorem}\n⊢ " + " ".join(words)

        module_idx = j % spec.num_theorem_modules
        states.append(
            StateRecord(
                state_text=state_text,
                theorem_name=theorem,
                tactic_index=None,
                positive_premises=positives,
                module=thm_modules[module_idx],
                decl_index=per_thm_module_count[module_idx],
            )
        )
        per_thm_module_count[module_idx] += 1

        goal = goal_for_theorem(theorem)
        goals[theorem] = goal
        core = frozenset(premises[p].name for p in picked[: min(2, len(picked))])
        cores[theorem] = core
        meta[theorem] = TheoremMeta(proof_lines=int(1 + rng.poisson(1.2)), num_positives=count)

        if j < spec.untranslatable:
            untranslatable.add(goal.key())
        elif j < spec.untranslatable + spec.unprovable:
            pass  # no entailment entry: the prover can never close it
        else:
            entailment[goal.key()] = (core,)
            if j < spec.untranslatable + spec.unprovable + spec.reconstruction_poison:
                poison.add(goal.key())

    corpus = Corpus(
        premises=tuple(premises),
        states=tuple(states),
        modules=modules,
        blacklist=frozenset(),
        snapshot_id=compute_snapshot_id(premises),
    )
    world = SyntheticWorld(
        world=MockWorld(
            entailment=entailment,
            untranslatable=frozenset(untranslatable),
            reconstruction_poison=frozenset(poison),
        ),
        goals=goals,
        minimal_cores=cores,
        theorem_meta=meta,
    )
    return corpus, world


def write_synthetic(corpus: Corpus, world: SyntheticWorld, directory: str | Path) -> tuple[Path, Path]:
    """Write ``corpus.jsonl`` and ``world.json``; returns both paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus_path = directory / "corpus.jsonl"
    corpus_path.write_text(corpus_to_jsonl(corpus), encoding="utf-8")
    world_path = directory / "world.json"
    doc = {
        "type": "synthetic-world",
        "world": world_to_json(world.world),
        "goals": {t: goal_to_json(g) for t, g in sorted(world.goals.items())},
        "minimal_cores": {t: sorted(c) for t, c in sorted(world.minimal_cores.items())},
        "theorem_meta": {
            t: {"proof_lines": m.proof_lines, "num_positives": m.num_positives}
            for t, m in sorted(world.theorem_meta.items())
        },
    }
    world_path.write_text(json.dumps(doc, ensure_ascii=False, indent=1), encoding="utf-8")
    return corpus_path, world_path


def load_synthetic_world(path: str | Path) -> SyntheticWorld:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("type") != "synthetic-world":
        raise ValueError(f"not a synthetic world file: {path}")
    return SyntheticWorld(
        world=world_from_json(doc["world"]),
        goals={t: goal_from_json(g) for t, g in doc["goals"].items()},
        minimal_cores={t: frozenset(c) for t, c in doc["minimal_cores"].items()},
        theorem_meta={
            t: TheoremMeta(proof_lines=int(m["proof_lines"]), num_positives=int(m["num_positives"]))
            for t, m in doc["theorem_meta"].items()
        },
    )
