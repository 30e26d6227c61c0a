"""Simulated hammer pipeline: prioritized proof search with pluggable provers.

Goals live in a toy and/or logic over named atoms. Search on a goal tries
rules in descending priority: built-in rules first (reflexivity, assumption,
constructor split), then direct premise applications (backward chaining on
an implication, weight 0.20, drawn from the top-k2 selected premises), then
a call to an external prover via translation (weight 0.10, given the top-k1
premises). When the prover succeeds it reports the exact subset of premises
it used, and only that core is handed to the reconstruction step, mirroring
how a proof-producing tactic re-derives an externally found proof.

Backends are plugins; :func:`mock_backend` provides a scriptable stand-in
driven by entailment tables, so the control flow and failure taxonomy stay
testable without real provers.
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, Sequence

VARIANTS = ("aesop", "auto", "aesop_auto", "full")

PHASE_ORDER = (
    "builtin_search",
    "premise_application",
    "translation",
    "external_prover",
    "reconstruction",
)

FAILURE_CATEGORIES = (
    "none",
    "translation_failure",
    "prover_failure",
    "reconstruction_failure",
    "other_error",
    "timeout",
)


@dataclass(frozen=True)
class Goal:
    """A goal term: a named atom, or a conjunction/disjunction of subgoals."""

    op: str  # "atom" | "and" | "or"
    name: str = ""
    children: tuple["Goal", ...] = ()

    @staticmethod
    def atom(name: str) -> "Goal":
        return Goal(op="atom", name=name)

    @staticmethod
    def all_of(*children: "Goal") -> "Goal":
        return Goal(op="and", children=tuple(children))

    @staticmethod
    def any_of(*children: "Goal") -> "Goal":
        return Goal(op="or", children=tuple(children))

    def key(self) -> str:
        """Canonical string key, used by entailment tables and traces."""
        if self.op == "atom":
            return f"atom:{self.name}"
        return f"{self.op}({','.join(c.key() for c in self.children)})"


def goal_to_json(goal: Goal) -> dict:
    if goal.op == "atom":
        return {"atom": goal.name}
    return {goal.op: [goal_to_json(c) for c in goal.children]}


def goal_from_json(obj: Mapping) -> Goal:
    if "atom" in obj:
        return Goal.atom(str(obj["atom"]))
    for op in ("and", "or"):
        if op in obj:
            return Goal(op=op, children=tuple(goal_from_json(c) for c in obj[op]))
    raise ValueError(f"not a goal object: {obj!r}")


@dataclass(frozen=True)
class PremiseRule:
    """Toy-logic meaning of a premise: backward chaining closes ``conclusion``."""

    conclusion: str
    antecedents: tuple[Goal, ...] = ()


@dataclass(frozen=True)
class ProofTask:
    name: str
    goal: Goal
    accessible: tuple[str, ...]
    variant: str = "full"
    k1: int = 16  # premises handed to the external prover
    k2: int = 32  # premises used as application rules
    prover_timeout_s: float = 10.0
    wall_timeout_s: float = 300.0
    step_budget: int = 200_000  # expansion steps, standing in for a heartbeat limit
    hypotheses: frozenset[str] = frozenset()
    rules: Mapping[str, PremiseRule] = field(default_factory=dict)
    state_text: str = ""

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.wall_timeout_s <= 0 or self.step_budget <= 0 or self.prover_timeout_s <= 0:
            raise ValueError("budgets must be positive")


@dataclass(frozen=True)
class ProofOutcome:
    proved: bool
    premises_used: frozenset[str]
    phase: str
    failure_category: str
    timings: dict[str, float]

    def __post_init__(self):
        if self.proved and self.failure_category != "none":
            raise ValueError("a proved outcome cannot carry a failure category")


Selector = Callable[[ProofTask], Sequence[str]]
TraceSink = list


class ProverBackend(Protocol):
    """Translation + external proving + reconstruction plugin interface."""

    def translate(self, goal: Goal, premises: Sequence[str]) -> object | None: ...

    def prove(self, problem: object, timeout_s: float) -> tuple[str, ...] | None: ...

    def reconstruct(self, goal: Goal, core: Sequence[str]) -> object | None: ...


@dataclass(frozen=True)
class MockWorld:
    """Scripted prover knowledge: which premise subsets entail which goals."""

    entailment: Mapping[str, tuple[frozenset[str], ...]]
    untranslatable: frozenset[str] = frozenset()
    reconstruction_poison: frozenset[str] = frozenset()


@dataclass(frozen=True)
class TranslatedProblem:
    goal_key: str
    premises: tuple[str, ...]


class MockBackend:
    """Table-driven prover stand-in; records every call for assertions."""

    def __init__(self, world: MockWorld):
        self.world = world
        self.translate_calls: list[tuple[str, tuple[str, ...]]] = []
        self.prove_calls: list[tuple[str, tuple[str, ...], float]] = []
        self.reconstruct_calls: list[tuple[str, tuple[str, ...]]] = []

    def translate(self, goal: Goal, premises: Sequence[str]) -> TranslatedProblem | None:
        key = goal.key()
        self.translate_calls.append((key, tuple(premises)))
        if key in self.world.untranslatable:
            return None
        return TranslatedProblem(goal_key=key, premises=tuple(premises))

    def prove(self, problem: TranslatedProblem, timeout_s: float) -> tuple[str, ...] | None:
        self.prove_calls.append((problem.goal_key, problem.premises, timeout_s))
        supplied = set(problem.premises)
        usable = [
            tuple(sorted(core))
            for core in self.world.entailment.get(problem.goal_key, ())
            if set(core) <= supplied
        ]
        if not usable:
            return None
        return min(usable)

    def reconstruct(self, goal: Goal, core: Sequence[str]) -> object | None:
        key = goal.key()
        self.reconstruct_calls.append((key, tuple(core)))
        if key in self.world.reconstruction_poison:
            return None
        return ("proof", key, tuple(core))


def mock_backend(world: MockWorld) -> MockBackend:
    return MockBackend(world)


class _BudgetExhausted(Exception):
    pass


class _Search:
    def __init__(self, task: ProofTask, ranked: Sequence[str], backend: ProverBackend, trace: TraceSink | None):
        self.task = task
        self.ranked = list(ranked)
        self.backend = backend
        self.trace = trace
        self.deadline = time.monotonic() + task.wall_timeout_s
        self.steps_left = task.step_budget
        self.timings: dict[str, float] = {}
        self.phase_reached = 0
        self.translation_failed = False
        self.prover_failed = False
        self.reconstruction_failed = False
        self.used_prover = False
        self.used_application = False

    def _tick(self) -> None:
        self.steps_left -= 1
        if self.steps_left < 0 or time.monotonic() > self.deadline:
            raise _BudgetExhausted

    def _reach(self, phase: str) -> None:
        self.phase_reached = max(self.phase_reached, PHASE_ORDER.index(phase))

    @contextmanager
    def _timed(self, phase: str):
        start = time.monotonic()
        try:
            yield
        finally:
            self.timings[phase] = self.timings.get(phase, 0.0) + (time.monotonic() - start)

    def _log(self, rule: str, goal: Goal, ok: bool, **extra) -> None:
        if self.trace is not None:
            event = {"event": "rule", "rule": rule, "goal": goal.key(), "ok": ok}
            event.update(extra)
            self.trace.append(event)

    def prove_goal(self, goal: Goal, active: frozenset[str]) -> tuple[bool, frozenset[str]]:
        self._tick()
        self._reach("builtin_search")
        with self._timed("builtin_search"):
            done, used = self._try_builtin(goal, active)
        if done:
            return True, used
        if self.task.variant in ("aesop", "full"):
            done, used = self._try_applications(goal, active)
            if done:
                return True, used
        if self.task.variant in ("aesop_auto", "full"):
            ok, core = self.attempt_prover(goal)
            if ok:
                return True, core
        return False, frozenset()

    def _try_builtin(self, goal: Goal, active: frozenset[str]) -> tuple[bool, frozenset[str]]:
        if goal.op == "atom":
            if _is_reflexive(goal.name):
                self._log("reflexivity", goal, True)
                return True, frozenset()
            if goal.name in self.task.hypotheses:
                self._log("assumption", goal, True)
                return True, frozenset()
            return False, frozenset()
        if goal.op == "and":
            self._log("split_and", goal, True)
            used: frozenset[str] = frozenset()
            for child in goal.children:
                ok, child_used = self.prove_goal(child, active)
                if not ok:
                    return False, frozenset()
                used |= child_used
            return True, used
        # "or": first provable alternative wins
        self._log("split_or", goal, True)
        for child in goal.children:
            ok, child_used = self.prove_goal(child, active)
            if ok:
                return True, child_used
        return False, frozenset()

    def _try_applications(self, goal: Goal, active: frozenset[str]) -> tuple[bool, frozenset[str]]:
        if goal.op != "atom":
            return False, frozenset()
        key = goal.key()
        for name in self.ranked[: self.task.k2]:
            rule = self.task.rules.get(name)
            if rule is None or rule.conclusion != goal.name:
                continue
            self._tick()
            self._reach("premise_application")
            if key in active:
                self._log("premise_application", goal, False, premise=name, reason="cycle")
                continue
            with self._timed("premise_application"):
                used: frozenset[str] = frozenset({name})
                ok = True
                for subgoal in rule.antecedents:
                    sub_ok, sub_used = self.prove_goal(subgoal, active | {key})
                    if not sub_ok:
                        ok = False
                        break
                    used |= sub_used
            self._log("premise_application", goal, ok, premise=name)
            if ok:
                self.used_application = True
                return True, used
        return False, frozenset()

    def attempt_prover(self, goal: Goal) -> tuple[bool, frozenset[str]]:
        supplied = tuple(self.ranked[: self.task.k1])
        self._tick()
        self._reach("translation")
        with self._timed("translation"):
            problem = self.backend.translate(goal, supplied)
        if problem is None:
            self._log("translate", goal, False, premises=list(supplied))
            self.translation_failed = True
            return False, frozenset()
        self._log("translate", goal, True, premises=list(supplied))

        self._tick()
        self._reach("external_prover")
        with self._timed("external_prover"):
            core = self.backend.prove(problem, self.task.prover_timeout_s)
        if core is None:
            self._log("prove", goal, False)
            self.prover_failed = True
            return False, frozenset()
        if not set(core) <= set(supplied):
            raise RuntimeError(
                f"backend returned premises it was not given: {sorted(set(core) - set(supplied))}"
            )
        self._log("prove", goal, True, core=list(core))

        self._tick()
        self._reach("reconstruction")
        with self._timed("reconstruction"):
            proof = self.backend.reconstruct(goal, core)
        ok = proof is not None
        self._log("reconstruct", goal, ok, core=list(core))
        if not ok:
            self.reconstruction_failed = True
            return False, frozenset()
        self.used_prover = True
        return True, frozenset(core)

    def failure_category(self) -> str:
        if self.reconstruction_failed:
            return "reconstruction_failure"
        if self.prover_failed:
            return "prover_failure"
        if self.translation_failed:
            return "translation_failure"
        return "other_error"

    def outcome(self, proved: bool, used: frozenset[str], *, timed_out: bool = False) -> ProofOutcome:
        if proved:
            if self.used_prover:
                phase = "reconstruction"
            elif self.used_application:
                phase = "premise_application"
            else:
                phase = "builtin_search"
            return ProofOutcome(True, used, phase, "none", dict(self.timings))
        category = "timeout" if timed_out else self.failure_category()
        return ProofOutcome(False, frozenset(), PHASE_ORDER[self.phase_reached], category, dict(self.timings))


def _is_reflexive(name: str) -> bool:
    parts = name.split(":")
    return len(parts) == 3 and parts[0] == "eq" and parts[1] == parts[2]


def run_task(
    task: ProofTask,
    selector: Selector,
    backend: ProverBackend,
    trace: TraceSink | None = None,
) -> ProofOutcome:
    """Run one task under its variant; failures are outcomes, never raises."""
    allowed = set(task.accessible)
    ranked = [n for n in selector(task) if n in allowed]
    search = _Search(task, ranked, backend, trace)
    try:
        if task.variant == "auto":
            # One direct prover shot on the whole goal: no search at all.
            proved, used = search.attempt_prover(task.goal)
        else:
            proved, used = search.prove_goal(task.goal, frozenset())
    except _BudgetExhausted:
        return search.outcome(False, frozenset(), timed_out=True)
    return search.outcome(proved, used)


def run_variant_suite(
    task_base: ProofTask,
    selector: Selector,
    backend: ProverBackend,
    *,
    independent_budgets: bool = False,
    trace: TraceSink | None = None,
) -> dict[str, ProofOutcome]:
    """Run all four variants plus the derived cumul entry.

    By default the four runs share one wall clock (``task_base``'s); with
    ``independent_budgets`` each variant gets the full budget to itself.
    """
    outcomes: dict[str, ProofOutcome] = {}
    start = time.monotonic()
    for variant in VARIANTS:
        if independent_budgets:
            remaining = task_base.wall_timeout_s
        else:
            remaining = task_base.wall_timeout_s - (time.monotonic() - start)
        if remaining <= 0:
            outcomes[variant] = ProofOutcome(False, frozenset(), "builtin_search", "timeout", {})
            continue
        task = replace(task_base, variant=variant, wall_timeout_s=remaining)
        outcomes[variant] = run_task(task, selector, backend, trace=trace)
    outcomes["cumul"] = _cumulative(outcomes)
    return outcomes


def _cumulative(outcomes: Mapping[str, ProofOutcome]) -> ProofOutcome:
    timings: dict[str, float] = {}
    for variant in VARIANTS:
        for phase, seconds in outcomes[variant].timings.items():
            timings[phase] = timings.get(phase, 0.0) + seconds
    for variant in VARIANTS:
        out = outcomes[variant]
        if out.proved:
            return ProofOutcome(True, out.premises_used, out.phase, "none", timings)
    fallback = outcomes["full"]
    return ProofOutcome(False, frozenset(), fallback.phase, fallback.failure_category, timings)


# --- task batch files -------------------------------------------------------

def world_to_json(world: MockWorld) -> dict:
    return {
        "type": "world",
        "entailment": {key: [sorted(core) for core in cores] for key, cores in world.entailment.items()},
        "untranslatable": sorted(world.untranslatable),
        "reconstruction_poison": sorted(world.reconstruction_poison),
    }


def world_from_json(obj: Mapping) -> MockWorld:
    return MockWorld(
        entailment={
            key: tuple(frozenset(core) for core in cores)
            for key, cores in obj.get("entailment", {}).items()
        },
        untranslatable=frozenset(obj.get("untranslatable", ())),
        reconstruction_poison=frozenset(obj.get("reconstruction_poison", ())),
    )


def task_to_json(task: ProofTask, ranking: Sequence[str] | None = None) -> dict:
    doc = {
        "type": "task",
        "name": task.name,
        "goal": goal_to_json(task.goal),
        "accessible": list(task.accessible),
        "variant": task.variant,
        "k1": task.k1,
        "k2": task.k2,
        "prover_timeout_s": task.prover_timeout_s,
        "wall_timeout_s": task.wall_timeout_s,
        "step_budget": task.step_budget,
        "hypotheses": sorted(task.hypotheses),
        "rules": {
            name: {
                "conclusion": rule.conclusion,
                "antecedents": [goal_to_json(g) for g in rule.antecedents],
            }
            for name, rule in task.rules.items()
        },
        "state_text": task.state_text,
    }
    if ranking is not None:
        doc["ranking"] = list(ranking)
    return doc


def task_from_json(obj: Mapping) -> tuple[ProofTask, list[str] | None]:
    task = ProofTask(
        name=str(obj["name"]),
        goal=goal_from_json(obj["goal"]),
        accessible=tuple(obj["accessible"]),
        variant=obj.get("variant", "full"),
        k1=int(obj.get("k1", 16)),
        k2=int(obj.get("k2", 32)),
        prover_timeout_s=float(obj.get("prover_timeout_s", 10.0)),
        wall_timeout_s=float(obj.get("wall_timeout_s", 300.0)),
        step_budget=int(obj.get("step_budget", 200_000)),
        hypotheses=frozenset(obj.get("hypotheses", ())),
        rules={
            name: PremiseRule(
                conclusion=str(rule["conclusion"]),
                antecedents=tuple(goal_from_json(g) for g in rule.get("antecedents", ())),
            )
            for name, rule in obj.get("rules", {}).items()
        },
        state_text=str(obj.get("state_text", "")),
    )
    ranking = obj.get("ranking")
    return task, (list(ranking) if ranking is not None else None)


@dataclass(frozen=True)
class TaskBatch:
    tasks: tuple[ProofTask, ...]
    world: MockWorld
    rankings: dict[str, list[str]]

    def selector(self) -> Selector:
        """Selector serving the per-task rankings (accessible order as fallback)."""
        return lambda task: self.rankings.get(task.name, list(task.accessible))


def load_task_batch(path: str | Path) -> TaskBatch:
    """Read a JSONL batch: one world record plus any number of task records."""
    tasks: list[ProofTask] = []
    rankings: dict[str, list[str]] = {}
    world = MockWorld(entailment={})
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        raw = raw.strip()
        if not raw:
            continue
        obj = json.loads(raw)
        kind = obj.get("type")
        if kind == "world":
            world = world_from_json(obj)
        elif kind == "task":
            task, ranking = task_from_json(obj)
            tasks.append(task)
            if ranking is not None:
                rankings[task.name] = ranking
        else:
            raise ValueError(f"line {line_no}: unknown batch record type {kind!r}")
    return TaskBatch(tasks=tuple(tasks), world=world, rankings=rankings)


def run_task_batch(
    batch: TaskBatch,
    *,
    variants: bool = False,
    independent_budgets: bool = False,
    trace: TraceSink | None = None,
) -> list[tuple[ProofTask, dict[str, ProofOutcome]]]:
    """Run every task in a batch against a fresh mock backend.

    With ``variants`` each task runs the whole suite (plus cumul); otherwise
    only the task's own variant, reported under that variant's name.
    """
    results = []
    selector = batch.selector()
    for task in batch.tasks:
        backend = MockBackend(batch.world)
        if variants:
            outcomes = run_variant_suite(
                task, selector, backend, independent_budgets=independent_budgets, trace=trace
            )
        else:
            outcomes = {task.variant: run_task(task, selector, backend, trace=trace)}
        results.append((task, outcomes))
    return results
