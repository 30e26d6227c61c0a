"""Evaluation harness: recall@k, proof rates, k-sweeps, difficulty and error stats.

Recall@k is macro-averaged: per state the fraction of ground-truth premises
appearing in the top-k over its accessible pool, then the mean across
states (a micro-averaged variant is available behind a flag, with no claim
attached). Proof rates come from the orchestrator running the toy tasks of
a synthetic world. Reports are emitted as both JSON and CSV; no plots.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, iter_state_positions
from .orchestrator import (
    VARIANTS,
    MockBackend,
    ProofOutcome,
    ProofTask,
    Selector,
    run_task,
    run_variant_suite,
)
from .selectors import TextSelector
from .synthetic import SyntheticWorld

logger = logging.getLogger(__name__)

PROOF_LINE_BUCKETS = ("1-2", "3-5", "6-10", "11+", "unknown")
POSITIVE_COUNT_BUCKETS = ("0", "1-8", "9-16", "17-32", "33+")

ERROR_CATEGORIES = (
    "translation_failure",
    "prover_failure",
    "reconstruction_failure",
    "other_error",
    "proved",
)


@dataclass(frozen=True)
class RecallResult:
    values: dict[int, float]
    states_evaluated: int
    states_skipped: int  # zero-positive states, excluded with a warning
    truncated_states: int  # state texts longer than the tokenizer limit


def compute_recall(
    selector: TextSelector,
    corpus: Corpus,
    k_list: Sequence[int],
    *,
    micro: bool = False,
    tokenizer_limit: int | None = None,
) -> RecallResult:
    """Mean recall@k over states; candidates are the accessible pool per state."""
    ks = sorted(set(int(k) for k in k_list))
    if not ks or ks[0] < 0:
        raise ValueError("k values must be nonnegative")
    top = max(ks)
    hit_sums = {k: 0.0 for k in ks}
    hits_abs = {k: 0 for k in ks}
    total_positives = 0
    evaluated = 0
    skipped = 0
    truncated = 0
    for state, pool in iter_state_positions(corpus):
        if not state.positive_premises:
            skipped += 1
            continue
        evaluated += 1
        if tokenizer_limit is not None and len(state.state_text.split()) > tokenizer_limit:
            truncated += 1
        ranked = selector(state.state_text, pool, top)
        positives = state.positive_premises
        total_positives += len(positives)
        for k in ks:
            overlap = sum(1 for name in ranked[:k] if name in positives)
            hit_sums[k] += overlap / len(positives)
            hits_abs[k] += overlap
    if skipped:
        logger.warning("recall: skipped %d state(s) with no positive premises", skipped)
    if evaluated == 0:
        values = {k: 0.0 for k in ks}
    elif micro:
        values = {k: hits_abs[k] / total_positives for k in ks}
    else:
        values = {k: hit_sums[k] / evaluated for k in ks}
    return RecallResult(values=values, states_evaluated=evaluated, states_skipped=skipped, truncated_states=truncated)


def recall_at_k(
    selector: TextSelector,
    corpus: Corpus,
    k_list: Sequence[int],
    *,
    micro: bool = False,
) -> dict[int, float]:
    return compute_recall(selector, corpus, k_list, micro=micro).values


def build_tasks(
    corpus: Corpus,
    world: SyntheticWorld,
    *,
    variant: str = "full",
    k1: int = 16,
    k2: int = 32,
    prover_timeout_s: float = 10.0,
    wall_timeout_s: float = 300.0,
    step_budget: int = 200_000,
) -> list[ProofTask]:
    """One orchestrator task per theorem-initial state of the corpus."""
    tasks = []
    for state, pool in iter_state_positions(corpus):
        if state.tactic_index is not None:
            continue
        goal = world.goals.get(state.theorem_name)
        if goal is None:
            continue
        tasks.append(
            ProofTask(
                name=state.theorem_name,
                goal=goal,
                accessible=tuple(pool),
                variant=variant,
                k1=k1,
                k2=k2,
                prover_timeout_s=prover_timeout_s,
                wall_timeout_s=wall_timeout_s,
                step_budget=step_budget,
                state_text=state.state_text,
            )
        )
    return tasks


def orchestrator_selector(text_selector: TextSelector) -> Selector:
    """Adapt a text selector to the orchestrator callback shape."""

    def select(task: ProofTask) -> list[str]:
        want = max(task.k1, task.k2)
        return text_selector(task.state_text, list(task.accessible), want)

    return select


@dataclass(frozen=True)
class TheoremRow:
    name: str
    proved: dict[str, bool]
    runtime_s: float
    failure_category: str
    human_proof_lines: int | None
    num_positives: int


@dataclass(frozen=True)
class EvalReport:
    recall_at_k: dict[int, float]
    proof_rate: dict[str, float]
    per_theorem: list[TheoremRow]
    config: dict
    states_skipped: int = 0
    truncated_states: int = 0


def run_proof_suite(
    corpus: Corpus,
    world: SyntheticWorld,
    text_selector: TextSelector,
    *,
    k1: int = 16,
    k2: int = 32,
    wall_timeout_s: float = 300.0,
    step_budget: int = 200_000,
    independent_budgets: bool = True,
) -> list[tuple[ProofTask, dict[str, ProofOutcome]]]:
    """Run every task under all variants (plus cumul) with a fresh mock backend."""
    tasks = build_tasks(corpus, world, k1=k1, k2=k2, wall_timeout_s=wall_timeout_s, step_budget=step_budget)
    selector = orchestrator_selector(text_selector)
    results = []
    for task in tasks:
        backend = MockBackend(world.world)
        results.append(
            (task, run_variant_suite(task, selector, backend, independent_budgets=independent_budgets))
        )
    return results


def make_report(
    suite: Sequence[tuple[ProofTask, dict[str, ProofOutcome]]],
    world: SyntheticWorld,
    recall: RecallResult | None,
    config: Mapping,
) -> EvalReport:
    rows: list[TheoremRow] = []
    counts = {v: 0 for v in (*VARIANTS, "cumul")}
    for task, outcomes in suite:
        meta = world.theorem_meta.get(task.name)
        full = outcomes.get("full") or next(iter(outcomes.values()))
        for variant, out in outcomes.items():
            if out.proved and variant in counts:
                counts[variant] += 1
        rows.append(
            TheoremRow(
                name=task.name,
                proved={v: o.proved for v, o in outcomes.items()},
                runtime_s=sum(sum(o.timings.values()) for o in outcomes.values()),
                failure_category=full.failure_category,
                human_proof_lines=meta.proof_lines if meta else None,
                num_positives=meta.num_positives if meta else len(world.minimal_cores.get(task.name, ())),
            )
        )
    total = len(suite)
    proof_rate = {v: (counts[v] / total if total else 0.0) for v in counts}
    return EvalReport(
        recall_at_k=dict(recall.values) if recall else {},
        proof_rate=proof_rate,
        per_theorem=rows,
        config=dict(config),
        states_skipped=recall.states_skipped if recall else 0,
        truncated_states=recall.truncated_states if recall else 0,
    )


@dataclass(frozen=True)
class SweepCell:
    k1: int
    k2: int
    proof_rate: float


def sweep_k(
    text_selector: TextSelector,
    corpus: Corpus,
    world: SyntheticWorld,
    k1_list: Sequence[int],
    k2_list: Sequence[int],
    *,
    variant: str = "full",
    wall_timeout_s: float = 300.0,
    step_budget: int = 200_000,
) -> list[SweepCell]:
    """Proof-rate grid over the (k1, k2) cross product."""
    cells = []
    for k1 in k1_list:
        for k2 in k2_list:
            tasks = build_tasks(
                corpus, world, variant=variant, k1=k1, k2=k2,
                wall_timeout_s=wall_timeout_s, step_budget=step_budget,
            )
            selector = orchestrator_selector(text_selector)
            proved = 0
            for task in tasks:
                backend = MockBackend(world.world)
                if run_task(task, selector, backend).proved:
                    proved += 1
            cells.append(SweepCell(k1=int(k1), k2=int(k2), proof_rate=proved / len(tasks) if tasks else 0.0))
    return cells


def error_report(outcomes: Iterable[ProofOutcome]) -> dict[str, float]:
    """Outcome fractions over the five pipeline categories (sum to 1).

    Timeouts are folded into ``other_error``: the taxonomy tracks pipeline
    stages, and a budget exhaustion is not attributable to one of them.
    """
    counts = {c: 0 for c in ERROR_CATEGORIES}
    total = 0
    for out in outcomes:
        total += 1
        if out.proved:
            counts["proved"] += 1
        elif out.failure_category in counts:
            counts[out.failure_category] += 1
        else:
            counts["other_error"] += 1
    if total == 0:
        return {c: 0.0 for c in ERROR_CATEGORIES}
    return {c: counts[c] / total for c in ERROR_CATEGORIES}


def _line_bucket(lines: int | None) -> str:
    if lines is None:
        return "unknown"
    if lines <= 2:
        return "1-2"
    if lines <= 5:
        return "3-5"
    if lines <= 10:
        return "6-10"
    return "11+"


def _positive_bucket(count: int) -> str:
    if count <= 0:
        return "0"
    if count <= 8:
        return "1-8"
    if count <= 16:
        return "9-16"
    if count <= 32:
        return "17-32"
    return "33+"


@dataclass(frozen=True)
class HistogramRow:
    metric: str  # "proof_lines" | "num_positives"
    bucket: str
    proved: int
    unproved: int


def difficulty_report(rows: Sequence[TheoremRow], variant: str = "full") -> list[HistogramRow]:
    """Proved/unproved histograms by human proof length and positive count."""
    out: list[HistogramRow] = []
    for metric, buckets, key in (
        ("proof_lines", PROOF_LINE_BUCKETS, lambda r: _line_bucket(r.human_proof_lines)),
        ("num_positives", POSITIVE_COUNT_BUCKETS, lambda r: _positive_bucket(r.num_positives)),
    ):
        proved = {b: 0 for b in buckets}
        unproved = {b: 0 for b in buckets}
        for row in rows:
            bucket = key(row)
            if row.proved.get(variant, False):
                proved[bucket] += 1
            else:
                unproved[bucket] += 1
        out.extend(HistogramRow(metric, b, proved[b], unproved[b]) for b in buckets)
    return out


# --- report emission --------------------------------------------------------

def write_report(report: EvalReport, directory: str | Path) -> None:
    """Emit report.json plus recall.csv, proof_rate.csv, and per_theorem.csv."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc = {
        "recall_at_k": {str(k): v for k, v in sorted(report.recall_at_k.items())},
        "proof_rate": report.proof_rate,
        "states_skipped": report.states_skipped,
        "truncated_states": report.truncated_states,
        "config": report.config,
        "per_theorem": [
            {
                "name": r.name,
                "proved": r.proved,
                "runtime_s": r.runtime_s,
                "failure_category": r.failure_category,
                "human_proof_lines": r.human_proof_lines,
                "num_positives": r.num_positives,
            }
            for r in report.per_theorem
        ],
    }
    (directory / "report.json").write_text(json.dumps(doc, indent=1), encoding="utf-8")
    with open(directory / "recall.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "recall"])
        for k, v in sorted(report.recall_at_k.items()):
            writer.writerow([k, repr(v)])
    with open(directory / "proof_rate.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "proof_rate"])
        for variant, rate in report.proof_rate.items():
            writer.writerow([variant, repr(rate)])
    with open(directory / "per_theorem.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        variants = sorted({v for r in report.per_theorem for v in r.proved})
        writer.writerow(["name", *(f"proved_{v}" for v in variants), "runtime_s", "failure_category", "human_proof_lines", "num_positives"])
        for r in report.per_theorem:
            writer.writerow(
                [
                    r.name,
                    *(int(r.proved.get(v, False)) for v in variants),
                    repr(r.runtime_s),
                    r.failure_category,
                    "" if r.human_proof_lines is None else r.human_proof_lines,
                    r.num_positives,
                ]
            )


def write_sweep(cells: Sequence[SweepCell], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k1", "k2", "proof_rate"])
        for cell in cells:
            writer.writerow([cell.k1, cell.k2, repr(cell.proof_rate)])


def write_error_report(fractions: Mapping[str, float], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "errors.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category", "fraction"])
        for category in ERROR_CATEGORIES:
            writer.writerow([category, repr(fractions.get(category, 0.0))])


def write_difficulty(rows: Sequence[HistogramRow], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "difficulty.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "bucket", "proved", "unproved"])
        for row in rows:
            writer.writerow([row.metric, row.bucket, row.proved, row.unproved])
