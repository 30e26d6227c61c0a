"""Command-line entry points.

Typical flow: ``synthetic`` to generate a corpus with planted structure,
``train`` to fit an encoder checkpoint, ``serve`` to host retrieval,
``client retrieve`` to query it, ``eval …`` for metrics, ``run-tasks`` to
drive the simulated hammer over a task batch file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import client as client_mod
from . import evaluation, selectors
from .corpus import Corpus, StateRecord, accessible_premises, filter_premises, load_blacklist, load_corpus
from .encoder import load_model, save_model
from .index import build_snapshot
from .mepo import MepoConfig, extract_symbols, mepo_select_detailed, take_final
from .orchestrator import load_task_batch, run_task_batch
from .server import PremiseService, serve
from .synthetic import SyntheticSpec, generate_synthetic, load_synthetic_world, write_synthetic
from .trainer import TrainConfig, train, write_loss_curve


def _load_filtered(path: str, blacklist: str | None) -> Corpus:
    extra = load_blacklist(blacklist) if blacklist else ()
    return filter_premises(load_corpus(path, blacklist=extra))


def _find_state(corpus: Corpus, state_id: str) -> StateRecord:
    """State ids look like ``Thm.theorem0001`` or ``Thm.theorem0001#2``."""
    theorem, _, idx = state_id.partition("#")
    tactic_index = int(idx) if idx else None
    for s in corpus.states:
        if s.theorem_name == theorem and s.tactic_index == tactic_index:
            return s
    raise SystemExit(f"no state {state_id!r} in corpus")


def _cmd_train(args: argparse.Namespace) -> int:
    corpus = _load_filtered(args.corpus, args.blacklist)
    config = TrainConfig(
        batch_size=args.batch_size,
        negatives_per_pair=args.negatives,
        temperature=args.temperature,
        learning_rate=args.lr,
        steps=args.steps,
        seed=args.seed,
        dim=args.dim,
        max_len=args.max_len,
    )
    result = train(corpus, config)
    save_model(result.model, args.out)
    if args.loss_csv:
        write_loss_curve(result.curve, args.loss_csv)
    if result.curve:
        print(f"steps={len(result.curve)} first_loss={result.curve[0].loss:.6f} last_loss={result.curve[-1].loss:.6f}")
    print(f"model {result.model.version[:16]} -> {args.out}")
    return 0


def _cmd_mepo(args: argparse.Namespace) -> int:
    corpus = _load_filtered(args.corpus, args.blacklist)
    state = _find_state(corpus, args.goal)
    pool = accessible_premises(corpus, state.module, state.decl_index)
    config = MepoConfig(p=args.p, c=args.c)
    pairs = [(name, extract_symbols(corpus.signature_of(name))) for name in pool]
    selection = mepo_select_detailed(extract_symbols(state.state_text), pairs, config)
    final = take_final(selection.names, args.k)
    print(f"# accepted={len(selection.names)} rounds={len(selection.rounds)} showing final {len(final)}")
    for name in final:
        print(name)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    service = PremiseService(model)
    corpus = _load_filtered(args.corpus, args.blacklist)
    snap_id = service.warm_cache(corpus)
    print(f"warmed snapshot {snap_id[:16]} ({len(corpus.premises)} premises)", flush=True)
    serve(service, args.addr)
    return 0


def _cmd_client_retrieve(args: argparse.Namespace) -> int:
    corpus = _load_filtered(args.corpus, args.blacklist)
    state = _find_state(corpus, args.state)
    ref = client_mod.ReferenceClient(args.server, corpus)
    body = ref.retrieve_at(state.state_text, state.module, state.decl_index, args.k, selector=args.selector)
    for entry in body["ranked"]:
        print(f"{entry['score']:.6f}  {entry['name']}")
    timings = body["timings"]
    print(f"# embed={timings['embed_ms']:.2f}ms search={timings['search_ms']:.2f}ms total={timings['total_ms']:.2f}ms")
    return 0


def _make_selector(kind: str, corpus: Corpus, model_path: str | None, seed: int) -> selectors.TextSelector:
    if kind == "neural":
        if not model_path:
            raise SystemExit("--model is required for the neural selector")
        model = load_model(model_path)
        snapshot = build_snapshot(model, corpus)
        return selectors.neural_selector(model, snapshot)
    if kind == "mepo":
        return selectors.mepo_selector({p.name: p.signature for p in corpus.premises})
    if kind == "random":
        return selectors.random_selector(seed)
    if kind == "oracle":
        return selectors.oracle_from_corpus(corpus)
    raise SystemExit(f"unknown selector {kind!r}")


def _cmd_eval(args: argparse.Namespace) -> int:
    corpus = _load_filtered(args.corpus, args.blacklist)
    out_dir = Path(args.out)
    if args.eval_cmd == "recall":
        selector = _make_selector(args.selector, corpus, args.model, args.seed)
        ks = [int(k) for k in args.k.split(",")]
        result = evaluation.compute_recall(selector, corpus, ks)
        report = evaluation.EvalReport(
            recall_at_k=result.values,
            proof_rate={},
            per_theorem=[],
            config={"selector": args.selector, "k": ks},
            states_skipped=result.states_skipped,
            truncated_states=result.truncated_states,
        )
        evaluation.write_report(report, out_dir)
        for k, v in sorted(result.values.items()):
            print(f"recall@{k} = {v:.4f}")
        return 0

    world = load_synthetic_world(args.world)
    selector = _make_selector(args.selector, corpus, args.model, args.seed)
    if args.eval_cmd == "sweep":
        cells = evaluation.sweep_k(
            selector, corpus, world,
            [int(k) for k in args.k1.split(",")],
            [int(k) for k in args.k2.split(",")],
        )
        evaluation.write_sweep(cells, out_dir)
        for cell in cells:
            print(f"k1={cell.k1:4d} k2={cell.k2:4d} proof_rate={cell.proof_rate:.4f}")
        return 0

    suite = evaluation.run_proof_suite(corpus, world, selector)
    if args.eval_cmd == "errors":
        fractions = evaluation.error_report([outcomes[args.variant] for _, outcomes in suite])
        evaluation.write_error_report(fractions, out_dir)
        for category, fraction in fractions.items():
            print(f"{category:24s} {fraction:.4f}")
        return 0
    if args.eval_cmd == "difficulty":
        recall = None
        report = evaluation.make_report(suite, world, recall, {"selector": args.selector})
        rows = evaluation.difficulty_report(report.per_theorem, variant=args.variant)
        evaluation.write_difficulty(rows, out_dir)
        evaluation.write_report(report, out_dir)
        for row in rows:
            print(f"{row.metric:14s} {row.bucket:8s} proved={row.proved:4d} unproved={row.unproved:4d}")
        return 0
    raise SystemExit(f"unknown eval command {args.eval_cmd!r}")


def _cmd_synthetic(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        num_premises=args.premises,
        num_states=args.states,
        untranslatable=args.untranslatable,
        unprovable=args.unprovable,
        reconstruction_poison=args.poison,
        seed=args.seed,
    )
    corpus, world = generate_synthetic(spec)
    corpus_path, world_path = write_synthetic(corpus, world, args.out)
    print(f"corpus: {corpus_path} ({len(corpus.premises)} premises, {len(corpus.states)} states)")
    print(f"world:  {world_path}")
    return 0


def _cmd_run_tasks(args: argparse.Namespace) -> int:
    batch = load_task_batch(args.tasks)
    trace: list | None = [] if args.trace else None
    results = run_task_batch(batch, variants=args.variants, trace=trace)
    with open(args.out, "w", encoding="utf-8") as fh:
        for task, outcomes in results:
            fh.write(
                json.dumps(
                    {
                        "task": task.name,
                        "outcomes": {
                            v: {
                                "proved": o.proved,
                                "premises_used": sorted(o.premises_used),
                                "phase": o.phase,
                                "failure_category": o.failure_category,
                                "timings": o.timings,
                            }
                            for v, o in outcomes.items()
                        },
                    }
                )
                + "\n"
            )
    if args.trace and trace is not None:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for event in trace:
                fh.write(json.dumps(event) + "\n")
    proved = sum(1 for _, outcomes in results if any(o.proved for o in outcomes.values()))
    print(f"{proved}/{len(results)} tasks proved -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="premiselect", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("train", help="train an encoder checkpoint")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--blacklist")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--negatives", type=int, default=3)
    p.add_argument("--temperature", type=float, default=0.05)
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--max-len", type=int, default=256)
    p.add_argument("--loss-csv")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("mepo", help="run the symbolic relevance filter on one state")
    p.add_argument("--corpus", required=True)
    p.add_argument("--blacklist")
    p.add_argument("--goal", required=True, help="state id: THEOREM or THEOREM#TACTIC_INDEX")
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--p", type=float, default=0.6)
    p.add_argument("--c", type=float, default=0.9)
    p.set_defaults(func=_cmd_mepo)

    p = sub.add_parser("serve", help="host the retrieval service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--blacklist")
    p.add_argument("--addr", help="host:port (default: $PREMISELECT_ADDR or 127.0.0.1:8777)")
    p.set_defaults(func=_cmd_serve)

    p_client = sub.add_parser("client", help="reference client commands")
    client_sub = p_client.add_subparsers(dest="client_cmd", required=True)
    p = client_sub.add_parser("retrieve", help="query a running server for one state")
    p.add_argument("--server", required=True, help="base URL, e.g. http://127.0.0.1:8777")
    p.add_argument("--corpus", required=True)
    p.add_argument("--blacklist")
    p.add_argument("--state", required=True, help="state id: THEOREM or THEOREM#TACTIC_INDEX")
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--selector", choices=("neural", "mepo"), default="neural")
    p.set_defaults(func=_cmd_client_retrieve)

    p_eval = sub.add_parser("eval", help="evaluation harness")
    eval_sub = p_eval.add_subparsers(dest="eval_cmd", required=True)
    common = dict(required=True)
    for name in ("recall", "sweep", "errors", "difficulty"):
        p = eval_sub.add_parser(name)
        p.add_argument("--corpus", **common)
        p.add_argument("--blacklist")
        p.add_argument("--out", required=True)
        p.add_argument("--model")
        p.add_argument("--selector", choices=selectors.SELECTOR_KINDS, default="neural")
        p.add_argument("--seed", type=int, default=0)
        if name == "recall":
            p.add_argument("--k", default="8,16,32")
        else:
            p.add_argument("--world", required=True, help="synthetic world.json with mock tables")
        if name == "sweep":
            p.add_argument("--k1", default="0,4,16")
            p.add_argument("--k2", default="16,32")
        if name in ("errors", "difficulty"):
            p.add_argument("--variant", default="auto" if name == "errors" else "full")
        p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synthetic", help="generate a planted-structure corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--premises", type=int, default=200)
    p.add_argument("--states", type=int, default=400)
    p.add_argument("--untranslatable", type=int, default=0)
    p.add_argument("--unprovable", type=int, default=0)
    p.add_argument("--poison", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synthetic)

    p = sub.add_parser("run-tasks", help="run a task batch through the simulated hammer")
    p.add_argument("--tasks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.add_argument("--variants", action="store_true", help="run every variant plus cumul per task")
    p.set_defaults(func=_cmd_run_tasks)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
