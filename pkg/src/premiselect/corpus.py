"""Corpus data model: premise records, proof states, and the module import DAG.

A corpus is loaded from a JSONL export produced by a proof-assistant-side
extractor. Each line is one object with a ``"type"`` discriminator:

``{"type": "premise", "name": str, "kind": "theorem"|"definition",
   "signature": str, "docstring": str|null, "module": str, "decl_index": int,
   "blacklisted": bool, "language_internal": bool}``

``{"type": "state", "state": str, "theorem": str, "tactic_index": int|null,
   "module": str, "decl_index": int, "positives": [str]}``

``{"type": "module", "name": str, "imports": [str]}``

Files are UTF-8 with LF line endings. The loader validates the schema, the
import DAG, premise-name resolution, and the notation lint on signatures.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

#: Notation shorthands that must not appear in a normalized signature.
#: Extend via the ``shorthands`` argument of :func:`parse_corpus`.
DEFAULT_NOTATION_SHORTHANDS: tuple[str, ...] = ("∃", "∧", "↔", "∣", "⤏", "ℕ")

PREMISE_KINDS = ("theorem", "definition")


class CorpusError(ValueError):
    """A corpus file violates the schema or a corpus invariant."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class PremiseRecord:
    """One retrievable fact: a theorem or definition with a normalized signature."""

    name: str
    kind: str
    signature: str
    docstring: str | None
    module: str
    decl_index: int
    is_blacklisted: bool = False
    is_language_internal: bool = False


@dataclass(frozen=True)
class StateRecord:
    """A proof state paired with the ground-truth premises of its theorem.

    ``tactic_index`` is ``None`` for the theorem-initial state. All states of
    one theorem carry the same ``positive_premises``: the set used by the
    whole human proof, not the next step.
    """

    state_text: str
    theorem_name: str
    tactic_index: int | None
    positive_premises: frozenset[str]
    module: str
    decl_index: int


@dataclass(frozen=True)
class Corpus:
    """Immutable corpus: ordered premises, states, import DAG, blacklist."""

    premises: tuple[PremiseRecord, ...]
    states: tuple[StateRecord, ...]
    modules: Mapping[str, tuple[str, ...]]
    blacklist: frozenset[str]
    snapshot_id: str

    @cached_property
    def premise_map(self) -> dict[str, PremiseRecord]:
        return {p.name: p for p in self.premises}

    @cached_property
    def premises_by_module(self) -> dict[str, tuple[PremiseRecord, ...]]:
        grouped: dict[str, list[PremiseRecord]] = {m: [] for m in self.modules}
        for p in self.premises:
            grouped[p.module].append(p)
        return {
            m: tuple(sorted(ps, key=lambda p: (p.decl_index, p.name)))
            for m, ps in grouped.items()
        }

    @cached_property
    def module_order(self) -> tuple[str, ...]:
        """Deterministic topological order of the import DAG (imports first)."""
        return _topological_order(self.modules)

    def signature_of(self, name: str) -> str:
        return self.premise_map[name].signature


def compute_snapshot_id(premises: Sequence[PremiseRecord]) -> str:
    """Content-address the premise collection (order-sensitive)."""
    h = hashlib.sha256()
    for p in premises:
        record = (
            p.name,
            p.kind,
            p.signature,
            p.docstring,
            p.module,
            p.decl_index,
            p.is_blacklisted,
            p.is_language_internal,
        )
        h.update(json.dumps(record, ensure_ascii=False).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def lint_signature(signature: str, shorthands: Iterable[str] = DEFAULT_NOTATION_SHORTHANDS) -> list[str]:
    """Return lint violations for a normalized signature (empty means clean)."""
    return [s for s in shorthands if s in signature]


def _topological_order(modules: Mapping[str, Sequence[str]]) -> tuple[str, ...]:
    # Kahn's algorithm with a name-ordered heap for a stable linearization.
    pending = {m: set(deps) for m, deps in modules.items()}
    dependents: dict[str, list[str]] = {m: [] for m in modules}
    for m, deps in modules.items():
        for d in deps:
            dependents[d].append(m)
    ready = [m for m, deps in pending.items() if not deps]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        m = heapq.heappop(ready)
        order.append(m)
        for dep in dependents[m]:
            pending[dep].discard(m)
            if not pending[dep]:
                heapq.heappush(ready, dep)
    if len(order) != len(modules):
        cyclic = sorted(m for m, deps in pending.items() if deps)
        raise CorpusError(f"import cycle among modules: {', '.join(cyclic)}")
    return tuple(order)


def _require(condition: bool, message: str, line: int) -> None:
    if not condition:
        raise CorpusError(message, line=line)


def parse_corpus(
    lines: Iterable[str],
    *,
    blacklist: Iterable[str] = (),
    shorthands: Iterable[str] = DEFAULT_NOTATION_SHORTHANDS,
) -> Corpus:
    """Parse and validate JSONL corpus lines into a :class:`Corpus`.

    ``blacklist`` marks additional premise names as blacklisted on top of the
    per-record ``blacklisted`` flag; both the flag and the list are data, not
    code, because the exact filter contents are deployment configuration.
    """
    extra_blacklist = frozenset(blacklist)
    shorthands = tuple(shorthands)
    premises: list[PremiseRecord] = []
    states: list[tuple[int, StateRecord]] = []
    modules: dict[str, tuple[str, ...]] = {}

    for line_no, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"invalid JSON ({exc.msg})", line=line_no) from exc
        _require(isinstance(obj, dict), "record is not an object", line_no)
        kind = obj.get("type")
        if kind == "premise":
            premises.append(_parse_premise(obj, line_no, extra_blacklist, shorthands))
        elif kind == "state":
            states.append((line_no, _parse_state(obj, line_no)))
        elif kind == "module":
            name = obj.get("name")
            imports = obj.get("imports")
            _require(isinstance(name, str) and name != "", "module needs a name", line_no)
            _require(
                isinstance(imports, list) and all(isinstance(i, str) for i in imports),
                "module imports must be a list of strings",
                line_no,
            )
            _require(name not in modules, f"duplicate module record {name!r}", line_no)
            modules[name] = tuple(imports)
        else:
            raise CorpusError(f"unknown record type {kind!r}", line=line_no)

    for m, imports in modules.items():
        for imp in imports:
            if imp not in modules:
                raise CorpusError(f"module {m!r} imports unknown module {imp!r}")

    seen_names: set[str] = set()
    seen_decls: set[tuple[str, int]] = set()
    for p in premises:
        if p.name in seen_names:
            raise CorpusError(f"duplicate premise name {p.name!r}")
        seen_names.add(p.name)
        if (p.module, p.decl_index) in seen_decls:
            raise CorpusError(f"duplicate decl_index {p.decl_index} in module {p.module!r}")
        seen_decls.add((p.module, p.decl_index))
        if p.module not in modules:
            raise CorpusError(f"premise {p.name!r} names unknown module {p.module!r}")

    for line_no, s in states:
        _require(s.module in modules, f"state names unknown module {s.module!r}", line_no)
        for pos in sorted(s.positive_premises):
            _require(pos in seen_names, f"state references unknown premise {pos!r}", line_no)

    corpus = Corpus(
        premises=tuple(premises),
        states=tuple(s for _, s in states),
        modules=modules,
        blacklist=extra_blacklist | frozenset(p.name for p in premises if p.is_blacklisted),
        snapshot_id=compute_snapshot_id(premises),
    )
    corpus.module_order  # force cycle detection at load time
    return corpus


def _parse_premise(
    obj: dict,
    line_no: int,
    extra_blacklist: frozenset[str],
    shorthands: tuple[str, ...],
) -> PremiseRecord:
    name = obj.get("name")
    _require(isinstance(name, str) and name != "", "premise needs a name", line_no)
    kind = obj.get("kind")
    _require(kind in PREMISE_KINDS, f"bad premise kind {kind!r}", line_no)
    signature = obj.get("signature")
    _require(isinstance(signature, str) and signature != "", "premise needs a signature", line_no)
    violations = lint_signature(signature, shorthands)
    _require(
        not violations,
        f"signature of {name!r} contains notation shorthand(s) {violations}",
        line_no,
    )
    docstring = obj.get("docstring")
    _require(docstring is None or isinstance(docstring, str), "docstring must be string or null", line_no)
    module = obj.get("module")
    _require(isinstance(module, str) and module != "", "premise needs a module", line_no)
    decl_index = obj.get("decl_index")
    _require(isinstance(decl_index, int) and decl_index >= 0, "decl_index must be a nonnegative int", line_no)
    return PremiseRecord(
        name=name,
        kind=kind,
        signature=signature,
        docstring=docstring,
        module=module,
        decl_index=decl_index,
        is_blacklisted=bool(obj.get("blacklisted", False)) or name in extra_blacklist,
        is_language_internal=bool(obj.get("language_internal", False)),
    )


def _parse_state(obj: dict, line_no: int) -> StateRecord:
    state_text = obj.get("state")
    _require(isinstance(state_text, str) and state_text != "", "state needs state text", line_no)
    theorem = obj.get("theorem")
    _require(isinstance(theorem, str) and theorem != "", "state needs a theorem name", line_no)
    tactic_index = obj.get("tactic_index")
    _require(
        tactic_index is None or (isinstance(tactic_index, int) and tactic_index >= 0),
        "tactic_index must be a nonnegative int or null",
        line_no,
    )
    module = obj.get("module")
    _require(isinstance(module, str) and module != "", "state needs a module", line_no)
    decl_index = obj.get("decl_index")
    _require(isinstance(decl_index, int), "state decl_index must be an int", line_no)
    positives = obj.get("positives")
    _require(
        isinstance(positives, list) and all(isinstance(p, str) for p in positives),
        "positives must be a list of strings",
        line_no,
    )
    return StateRecord(
        state_text=state_text,
        theorem_name=theorem,
        tactic_index=tactic_index,
        positive_premises=frozenset(positives),
        module=module,
        decl_index=decl_index,
    )


def load_corpus(
    path: str | Path,
    *,
    blacklist: Iterable[str] = (),
    shorthands: Iterable[str] = DEFAULT_NOTATION_SHORTHANDS,
) -> Corpus:
    """Load and validate a JSONL corpus file."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_corpus(text.splitlines(), blacklist=blacklist, shorthands=shorthands)


def load_blacklist(path: str | Path) -> frozenset[str]:
    """Read a blacklist names file: one name per line, ``#`` comments allowed."""
    names = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        entry = raw.split("#", 1)[0].strip()
        if entry:
            names.append(entry)
    return frozenset(names)


def corpus_to_jsonl(corpus: Corpus) -> str:
    """Serialize back to the JSONL export format (modules, premises, states)."""
    out: list[str] = []
    for m in sorted(corpus.modules):
        out.append(json.dumps({"type": "module", "name": m, "imports": list(corpus.modules[m])}, ensure_ascii=False))
    for p in corpus.premises:
        out.append(
            json.dumps(
                {
                    "type": "premise",
                    "name": p.name,
                    "kind": p.kind,
                    "signature": p.signature,
                    "docstring": p.docstring,
                    "module": p.module,
                    "decl_index": p.decl_index,
                    "blacklisted": p.is_blacklisted,
                    "language_internal": p.is_language_internal,
                },
                ensure_ascii=False,
            )
        )
    for s in corpus.states:
        out.append(
            json.dumps(
                {
                    "type": "state",
                    "state": s.state_text,
                    "theorem": s.theorem_name,
                    "tactic_index": s.tactic_index,
                    "module": s.module,
                    "decl_index": s.decl_index,
                    "positives": sorted(s.positive_premises),
                },
                ensure_ascii=False,
            )
        )
    return "\n".join(out) + "\n"


def filter_premises(corpus: Corpus) -> Corpus:
    """Drop blacklisted and language-internal premises; prune positive sets.

    Idempotent: a filtered corpus passes through unchanged (except that the
    snapshot id is always recomputed from the surviving premises).
    """
    kept = tuple(p for p in corpus.premises if not (p.is_blacklisted or p.is_language_internal))
    kept_names = frozenset(p.name for p in kept)
    states = tuple(
        replace(s, positive_premises=frozenset(s.positive_premises & kept_names))
        for s in corpus.states
    )
    return Corpus(
        premises=kept,
        states=states,
        modules=corpus.modules,
        blacklist=corpus.blacklist,
        snapshot_id=compute_snapshot_id(kept),
    )


def transitive_imports(corpus: Corpus, module: str) -> frozenset[str]:
    """All modules reachable through imports from ``module`` (exclusive)."""
    if module not in corpus.modules:
        raise CorpusError(f"unknown module {module!r}")
    seen: set[str] = set()
    stack = list(corpus.modules[module])
    while stack:
        m = stack.pop()
        if m in seen:
            continue
        seen.add(m)
        stack.extend(corpus.modules[m])
    return frozenset(seen)


def accessible_premises(corpus: Corpus, module: str, decl_index: int) -> list[str]:
    """Premise names legal to use at a position: the retrieval pool.

    Everything in transitively imported modules plus premises declared
    earlier (strictly smaller ``decl_index``) in the same module. Order is
    deterministic: topological module order, then ``decl_index``, then name.
    """
    imported = transitive_imports(corpus, module)
    names: list[str] = []
    for m in corpus.module_order:
        if m in imported:
            names.extend(p.name for p in corpus.premises_by_module.get(m, ()))
    names.extend(
        p.name
        for p in corpus.premises_by_module.get(module, ())
        if p.decl_index < decl_index
    )
    return names


def iter_state_positions(corpus: Corpus) -> Iterator[tuple[StateRecord, list[str]]]:
    """Yield each state with its accessible-premise pool (memoized per position)."""
    cache: dict[tuple[str, int], list[str]] = {}
    for s in corpus.states:
        key = (s.module, s.decl_index)
        if key not in cache:
            cache[key] = accessible_premises(corpus, s.module, s.decl_index)
        yield s, cache[key]
