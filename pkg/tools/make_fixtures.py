"""One-off generator for the committed test fixtures under tests/fixtures/."""

from __future__ import annotations

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
OUT.mkdir(parents=True, exist_ok=True)


def jl(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


# --- mem_domain.jsonl: one theorem, two states, 12 raw positives (4 survive) --

BLACKLISTED_LOGIC = [
    ("Iff.trans", "theorem Iff.trans {a b c : Prop} (h1 : Iff a b) (h2 : Iff b c) : Iff a c"),
    ("Eq.trans", "theorem Eq.trans {α : Sort u} {a b c : α} (h1 : Eq a b) (h2 : Eq b c) : Eq a c"),
    ("of_eq_true", "theorem of_eq_true {p : Prop} (h : Eq p True) : p"),
    ("iff_self", "theorem iff_self (p : Prop) : Eq (Iff p p) True"),
    ("congr", "theorem congr {α : Sort u} {β : Sort v} {f g : α → β} {a b : α} (h1 : Eq f g) (h2 : Eq a b) : Eq (f a) (g b)"),
    ("propext", "theorem propext {a b : Prop} (h : Iff a b) : Eq a b"),
    ("and_comm", "theorem and_comm {a b : Prop} : Iff (And a b) (And b a)"),
    ("congrArg", "theorem congrArg {α : Sort u} {β : Sort v} {a b : α} (f : α → β) (h : Eq a b) : Eq (f a) (f b)"),
]

KEPT = [
    ("Init.Logic", 0, "exists_prop", "theorem exists_prop {a b : Prop} : Iff (Exists fun h => b) (And a b)"),
    ("Init.Logic", 1, "funext", "theorem funext {α : Sort u} {β : α → Sort v} {f g : (x : α) → β x} (h : ∀ (x : α), Eq (f x) (g x)) : Eq f g"),
    (
        "Mathlib.Logic.Exists",
        0,
        "exists_exists_and_eq_and",
        "theorem exists_exists_and_eq_and {α : Sort u} {β : Sort v} {f : α → β} {p : α → Prop} {q : β → Prop} : "
        "Iff (Exists fun b => And (Exists fun a => And (p a) (Eq (f a) b)) (q b)) (Exists fun a => And (p a) (q (f a)))",
    ),
    (
        "Mathlib.Topology.Opens",
        0,
        "TopologicalSpace.Opens.mem_sSup",
        "theorem TopologicalSpace.Opens.mem_sSup {α : Type u} [TopologicalSpace α] {S : Set (TopologicalSpace.Opens α)} {x : α} : "
        "Iff (Membership.mem x (SSup.sSup S)) (Exists fun U => And (Membership.mem U S) (Membership.mem x U))",
    ),
]

MAIN_THEOREM = "AlgebraicGeometry.Scheme.RationalMap.mem_domain"
MAIN_SIGNATURE = (
    "theorem AlgebraicGeometry.Scheme.RationalMap.mem_domain {X Y : AlgebraicGeometry.Scheme} "
    "{f : X.RationalMap Y} {x : ↑↑X.toPresheafedSpace} : "
    "Iff (Membership.mem f.domain x) (Exists fun g => And (Membership.mem g.domain x) (Eq g.toRationalMap f))"
)
STATE_INITIAL = (
    "X Y : AlgebraicGeometry.Scheme\n"
    "f : X.RationalMap Y\n"
    "⊢ ∀ {x : ↑↑X.toPresheafedSpace}, Iff (Membership.mem f.domain x) "
    "(Exists fun g => And (Membership.mem g.domain x) (Eq g.toRationalMap f))"
)
STATE_MID = (
    "X Y : AlgebraicGeometry.Scheme\n"
    "f : X.RationalMap Y\n"
    "x : ↑↑X.toPresheafedSpace\n"
    "⊢ Iff (Exists fun u => And (Membership.mem u S) (Membership.mem x u)) "
    "(Exists fun g => And (Membership.mem g.domain x) (Eq g.toRationalMap f))"
)

RAW_POSITIVES = [
    "Iff.trans",
    "exists_prop",
    "Eq.trans",
    "of_eq_true",
    "iff_self",
    "congr",
    "funext",
    "exists_exists_and_eq_and",
    "TopologicalSpace.Opens.mem_sSup",
    "propext",
    "and_comm",
    "congrArg",
]

lines: list[str] = []
lines.append(jl({"type": "module", "name": "Init.Core", "imports": []}))
lines.append(jl({"type": "module", "name": "Init.Logic", "imports": ["Init.Core"]}))
lines.append(jl({"type": "module", "name": "Mathlib.Logic.Exists", "imports": ["Init.Logic"]}))
lines.append(jl({"type": "module", "name": "Mathlib.Topology.Opens", "imports": ["Init.Core"]}))
lines.append(
    jl(
        {
            "type": "module",
            "name": "Mathlib.AlgebraicGeometry.RationalMap",
            "imports": ["Mathlib.Logic.Exists", "Mathlib.Topology.Opens"],
        }
    )
)
lines.append(jl({"type": "module", "name": "Lean.Meta", "imports": []}))

for i, (name, signature) in enumerate(BLACKLISTED_LOGIC):
    lines.append(
        jl(
            {
                "type": "premise",
                "name": name,
                "kind": "theorem",
                "signature": signature,
                "docstring": None,
                "module": "Init.Core",
                "decl_index": i,
                "blacklisted": True,
                "language_internal": False,
            }
        )
    )
for module, decl, name, signature in KEPT:
    lines.append(
        jl(
            {
                "type": "premise",
                "name": name,
                "kind": "theorem",
                "signature": signature,
                "docstring": None,
                "module": module,
                "decl_index": decl,
                "blacklisted": False,
                "language_internal": False,
            }
        )
    )
lines.append(
    jl(
        {
            "type": "premise",
            "name": "Lean.Meta.whnf",
            "kind": "definition",
            "signature": "definition Lean.Meta.whnf (e : Lean.Expr) : Lean.MetaM Lean.Expr",
            "docstring": "Reduce an expression to weak head normal form.",
            "module": "Lean.Meta",
            "decl_index": 0,
            "blacklisted": False,
            "language_internal": True,
        }
    )
)
lines.append(
    jl(
        {
            "type": "premise",
            "name": MAIN_THEOREM,
            "kind": "theorem",
            "signature": MAIN_SIGNATURE,
            "docstring": None,
            "module": "Mathlib.AlgebraicGeometry.RationalMap",
            "decl_index": 0,
            "blacklisted": False,
            "language_internal": False,
        }
    )
)
for tactic_index, state in ((None, STATE_INITIAL), (0, STATE_MID)):
    lines.append(
        jl(
            {
                "type": "state",
                "state": state,
                "theorem": MAIN_THEOREM,
                "tactic_index": tactic_index,
                "module": "Mathlib.AlgebraicGeometry.RationalMap",
                "decl_index": 0,
                "positives": RAW_POSITIVES,
            }
        )
    )

(OUT / "mem_domain.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

blacklist_names = [name for name, _ in BLACKLISTED_LOGIC] + ["and_true", "true_and", "eq_self_iff_true", "imp_self"]
(OUT / "blacklist.txt").write_text(
    "# basic-logic premises excluded from retrieval\n" + "\n".join(blacklist_names) + "\n",
    encoding="utf-8",
)

# --- gcd_corpus.jsonl: 32 retrievable premises + one goal state ---------------

GCD_PREMISES = [
    ("GCDMonoid.gcd_dvd_left", "theorem GCDMonoid.gcd_dvd_left {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a b : α) : Dvd.dvd (GCDMonoid.gcd a b) a"),
    ("dvd_gcd_iff", "theorem dvd_gcd_iff {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a b c : α) : Iff (Dvd.dvd a (GCDMonoid.gcd b c)) (And (Dvd.dvd a b) (Dvd.dvd a c))"),
    ("GCDMonoid.dvd_gcd", "theorem GCDMonoid.dvd_gcd {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] {a b c : α} (hab : Dvd.dvd a b) (hac : Dvd.dvd a c) : Dvd.dvd a (GCDMonoid.gcd b c)"),
    ("GCDMonoid.gcd_dvd_right", "theorem GCDMonoid.gcd_dvd_right {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a b : α) : Dvd.dvd (GCDMonoid.gcd a b) b"),
    ("Associated.dvd_iff_dvd_right", "theorem Associated.dvd_iff_dvd_right {α : Type u} [Monoid α] {a b c : α} (h : Associated b c) : Iff (Dvd.dvd a b) (Dvd.dvd a c)"),
    ("Associated.dvd_iff_dvd_left", "theorem Associated.dvd_iff_dvd_left {α : Type u} [Monoid α] {a b c : α} (h : Associated a b) : Iff (Dvd.dvd a c) (Dvd.dvd b c)"),
    ("gcd_comm'", "theorem gcd_comm' {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a b : α) : Associated (GCDMonoid.gcd a b) (GCDMonoid.gcd b a)"),
    ("gcd_eq_zero_iff", "theorem gcd_eq_zero_iff {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a b : α) : Iff (Eq (GCDMonoid.gcd a b) 0) (And (Eq a 0) (Eq b 0))"),
    ("Associated.symm", "theorem Associated.symm {α : Type u} [Monoid α] {a b : α} (h : Associated a b) : Associated b a"),
    ("Associated.dvd", "theorem Associated.dvd {α : Type u} [Monoid α] {a b : α} (h : Associated a b) : Dvd.dvd a b"),
    ("gcd_zero_right'", "theorem gcd_zero_right' {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a : α) : Associated (GCDMonoid.gcd a 0) a"),
    ("Associated.trans", "theorem Associated.trans {α : Type u} [Monoid α] {a b c : α} (hab : Associated a b) (hbc : Associated b c) : Associated a c"),
    ("gcd_dvd_gcd", "theorem gcd_dvd_gcd {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] {a b c d : α} (hab : Dvd.dvd a b) (hcd : Dvd.dvd c d) : Dvd.dvd (GCDMonoid.gcd a c) (GCDMonoid.gcd b d)"),
    ("Associated.refl", "theorem Associated.refl {α : Type u} [Monoid α] (a : α) : Associated a a"),
    ("associated_one_iff_isUnit", "theorem associated_one_iff_isUnit {α : Type u} [Monoid α] {a : α} : Iff (Associated a 1) (IsUnit a)"),
    ("gcd_zero_left'", "theorem gcd_zero_left' {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a : α) : Associated (GCDMonoid.gcd 0 a) a"),
    ("instDecompositionMonoidOfNonemptyGCDMonoid", "definition instDecompositionMonoidOfNonemptyGCDMonoid {α : Type u} [CancelCommMonoidWithZero α] [Nonempty (GCDMonoid α)] : DecompositionMonoid α"),
    ("associated_of_dvd_dvd", "theorem associated_of_dvd_dvd {α : Type u} [CancelCommMonoidWithZero α] {a b : α} (hab : Dvd.dvd a b) (hba : Dvd.dvd b a) : Associated a b"),
    ("instNonemptyGCDMonoid", "definition instNonemptyGCDMonoid {α : Type u} [CancelCommMonoidWithZero α] [NormalizedGCDMonoid α] : Nonempty (GCDMonoid α)"),
    ("associated_gcd_left_iff", "theorem associated_gcd_left_iff {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] {x y : α} : Iff (Associated x (GCDMonoid.gcd x y)) (Dvd.dvd x y)"),
    ("gcd_mul_lcm", "theorem gcd_mul_lcm {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a b : α) : Associated (HMul.hMul (GCDMonoid.gcd a b) (GCDMonoid.lcm a b)) (HMul.hMul a b)"),
    ("gcd_assoc'", "theorem gcd_assoc' {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a b c : α) : Associated (GCDMonoid.gcd (GCDMonoid.gcd a b) c) (GCDMonoid.gcd a (GCDMonoid.gcd b c))"),
    ("dvd_dvd_iff_associated", "theorem dvd_dvd_iff_associated {α : Type u} [CancelCommMonoidWithZero α] {a b : α} : Iff (And (Dvd.dvd a b) (Dvd.dvd b a)) (Associated a b)"),
    ("gcd_mul_right'", "theorem gcd_mul_right' {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a b c : α) : Associated (GCDMonoid.gcd (HMul.hMul b a) (HMul.hMul c a)) (HMul.hMul (GCDMonoid.gcd b c) a)"),
    ("gcd_mul_left'", "theorem gcd_mul_left' {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a b c : α) : Associated (GCDMonoid.gcd (HMul.hMul a b) (HMul.hMul a c)) (HMul.hMul a (GCDMonoid.gcd b c))"),
    ("GCDMonoid.gcd_mul_lcm", "theorem GCDMonoid.gcd_mul_lcm {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a b : α) : Associated (HMul.hMul (GCDMonoid.gcd a b) (GCDMonoid.lcm a b)) (HMul.hMul a b)"),
    ("dvd_gcd_mul_of_dvd_mul", "theorem dvd_gcd_mul_of_dvd_mul {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] {m n k : α} (h : Dvd.dvd k (HMul.hMul m n)) : Dvd.dvd k (HMul.hMul (GCDMonoid.gcd k m) n)"),
    ("gcd_mul_dvd_mul_gcd", "theorem gcd_mul_dvd_mul_gcd {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (k m n : α) : Dvd.dvd (GCDMonoid.gcd k (HMul.hMul m n)) (HMul.hMul (GCDMonoid.gcd k m) (GCDMonoid.gcd k n))"),
    ("Associated.mul_left", "theorem Associated.mul_left {α : Type u} [Monoid α] (a : α) {b c : α} (h : Associated b c) : Associated (HMul.hMul a b) (HMul.hMul a c)"),
    ("gcd_one_right'", "theorem gcd_one_right' {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] (a : α) : Associated (GCDMonoid.gcd a 1) 1"),
    ("mul_dvd_mul_iff_left", "theorem mul_dvd_mul_iff_left {α : Type u} [CancelCommMonoidWithZero α] {a : α} (ha : Ne a 0) (b c : α) : Iff (Dvd.dvd (HMul.hMul a b) (HMul.hMul a c)) (Dvd.dvd b c)"),
    ("gcd_pow_left_dvd_pow_gcd", "theorem gcd_pow_left_dvd_pow_gcd {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] {a b : α} {k : Nat} : Dvd.dvd (GCDMonoid.gcd (HPow.hPow a k) b) (HPow.hPow (GCDMonoid.gcd a b) k)"),
]

GCD_THEOREM = "associated_gcd_right_iff"
GCD_STATE = (
    "A : Type\n"
    "inst¹ : CancelCommMonoidWithZero A\n"
    "inst : GCDMonoid A\n"
    "x y : A\n"
    "⊢ Iff (Associated y (GCDMonoid.gcd x y)) (Dvd.dvd y x)"
)
GCD_POSITIVES = [
    "GCDMonoid.gcd_dvd_left",
    "Associated.dvd_iff_dvd_left",
    "associated_of_dvd_dvd",
    "GCDMonoid.dvd_gcd",
    "Associated.dvd",
    "GCDMonoid.gcd_dvd_right",
]

lines = [jl({"type": "module", "name": "Mathlib.Algebra.GCDMonoid.Basic", "imports": []})]
for i, (name, signature) in enumerate(GCD_PREMISES):
    lines.append(
        jl(
            {
                "type": "premise",
                "name": name,
                "kind": "definition" if name.startswith("inst") else "theorem",
                "signature": signature,
                "docstring": None,
                "module": "Mathlib.Algebra.GCDMonoid.Basic",
                "decl_index": i,
                "blacklisted": False,
                "language_internal": False,
            }
        )
    )
lines.append(
    jl(
        {
            "type": "premise",
            "name": GCD_THEOREM,
            "kind": "theorem",
            "signature": "theorem associated_gcd_right_iff {α : Type u} [CancelCommMonoidWithZero α] [GCDMonoid α] {x y : α} : Iff (Associated y (GCDMonoid.gcd x y)) (Dvd.dvd y x)",
            "docstring": None,
            "module": "Mathlib.Algebra.GCDMonoid.Basic",
            "decl_index": len(GCD_PREMISES),
            "blacklisted": False,
            "language_internal": False,
        }
    )
)
lines.append(
    jl(
        {
            "type": "state",
            "state": GCD_STATE,
            "theorem": GCD_THEOREM,
            "tactic_index": None,
            "module": "Mathlib.Algebra.GCDMonoid.Basic",
            "decl_index": len(GCD_PREMISES),
            "positives": GCD_POSITIVES,
        }
    )
)
(OUT / "gcd_corpus.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

# --- gcd_scenario.jsonl: task batch exercising the full pipeline data flow ----

ranking = [name for name, _ in GCD_PREMISES]
world = {
    "type": "world",
    "entailment": {
        "atom:gcd_mp": [["GCDMonoid.gcd_dvd_left", "Associated.dvd_iff_dvd_left"]],
        "atom:dvd_gcd_subgoal": [["GCDMonoid.dvd_gcd", "Associated.dvd"]],
        # Also provable externally, but the higher-priority premise
        # application must win, so no prover call happens for this subgoal.
        "atom:gcd_dvd_right_subgoal": [["GCDMonoid.gcd_dvd_right"]],
    },
    "untranslatable": [],
    "reconstruction_poison": [],
}
task = {
    "type": "task",
    "name": GCD_THEOREM,
    "goal": {"and": [{"atom": "gcd_mp"}, {"atom": "gcd_mpr"}]},
    "accessible": ranking,
    "ranking": ranking,
    "variant": "full",
    "k1": 16,
    "k2": 32,
    "prover_timeout_s": 10.0,
    "wall_timeout_s": 300.0,
    "step_budget": 200000,
    "hypotheses": [],
    "rules": {
        "associated_of_dvd_dvd": {
            "conclusion": "gcd_mpr",
            "antecedents": [{"atom": "dvd_gcd_subgoal"}, {"atom": "gcd_dvd_right_subgoal"}],
        },
        "GCDMonoid.gcd_dvd_right": {"conclusion": "gcd_dvd_right_subgoal", "antecedents": []},
    },
    "state_text": GCD_STATE,
}
(OUT / "gcd_scenario.jsonl").write_text(jl(world) + "\n" + jl(task) + "\n", encoding="utf-8")

print("wrote fixtures to", OUT)
