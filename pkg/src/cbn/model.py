"""Constrained Bayesian network data model.

A constrained network is a DAG of nodes with symbolic probability tables
(entries are terms over the probability variables), a finite constraint
set, and a record of which marginal each marginal variable denotes.
This module owns loading/serialization, well-formedness, concretization,
and the soundness check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .poly import to_polynomial, to_rational_fn
from .terms import (
    Constraint, Eq, Mul, Term, Var, VarKind,
    constraint_to_text, constraint_vars, evaluate, holds, parse_constraint,
    parse_term, term_to_text, term_vars,
)

Assignment = Mapping[str, Fraction]


class ModelError(Exception):
    """Structural problems: schema violations, cycles, bad tables."""


@dataclass(frozen=True)
class MarginalSpec:
    """Which (conditional) marginal a marginal variable denotes."""

    target_node: str
    target_state: str
    evidence: tuple[tuple[str, str], ...] = ()

    @staticmethod
    def make(target_node: str, target_state: str, evidence: Optional[Mapping[str, str]] = None):
        ev = tuple(sorted((evidence or {}).items()))
        return MarginalSpec(target_node, target_state, ev)

    @property
    def evidence_map(self) -> dict[str, str]:
        return dict(self.evidence)


@dataclass(frozen=True)
class NodeSpec:
    name: str
    states: tuple[str, ...]
    parents: tuple[str, ...]
    table: Mapping[tuple[str, ...], Mapping[str, Term]]


@dataclass(frozen=True)
class ConstrainedBN:
    nodes: tuple[NodeSpec, ...]
    x_vars: frozenset[str]
    mp_vars: frozenset[str]
    constraints: tuple[Constraint, ...]
    marginal_defs: Mapping[str, MarginalSpec] = field(default_factory=dict)

    def node(self, name: str) -> NodeSpec:
        for n in self.nodes:
            if n.name == name:
                return n
        raise ModelError(f"no node named {name!r}")

    def node_names(self) -> list[str]:
        return [n.name for n in self.nodes]

    @property
    def variables(self) -> list[str]:
        """All variables in the fixed (lexicographic) order."""
        return sorted(self.x_vars | self.mp_vars)

    def var_kinds(self) -> dict[str, VarKind]:
        kinds = {v: VarKind.PROB for v in self.x_vars}
        kinds.update({v: VarKind.MARGINAL for v in self.mp_vars})
        return kinds


@dataclass(frozen=True)
class ConcreteBN:
    nodes: tuple[NodeSpec, ...]  # same shapes; table values are Const terms
    tables: Mapping[str, Mapping[tuple[str, ...], Mapping[str, Fraction]]]

    def node(self, name: str) -> NodeSpec:
        for n in self.nodes:
            if n.name == name:
                return n
        raise ModelError(f"no node named {name!r}")


@dataclass(frozen=True)
class Violation:
    var: str
    rule: str
    detail: str

    def __str__(self):
        return f"{self.rule} [{self.var}]: {self.detail}"


# --------------------------------------------------------------------------
# Construction and serialization


def _parent_key(parent_states: Sequence[str], state: str) -> str:
    return ",".join(parent_states) + "|" + state


def _split_key(key: str) -> tuple[tuple[str, ...], str]:
    head, sep, state = key.rpartition("|")
    if not sep:
        raise ModelError(f"bad table key {key!r}; expected '<p1,...,pk|state>'")
    parents = tuple(p for p in head.split(",") if p != "") if head else ()
    return parents, state


def make_model(
    nodes: Iterable[NodeSpec],
    x_vars: Iterable[str],
    mp_vars: Iterable[str],
    constraints: Iterable[Constraint],
    marginal_defs: Optional[Mapping[str, MarginalSpec]] = None,
) -> ConstrainedBN:
    b = ConstrainedBN(
        nodes=tuple(nodes),
        x_vars=frozenset(x_vars),
        mp_vars=frozenset(mp_vars),
        constraints=tuple(constraints),
        marginal_defs=dict(marginal_defs or {}),
    )
    _check_structure(b)
    return b


def _check_structure(b: ConstrainedBN) -> None:
    names = [n.name for n in b.nodes]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ModelError(f"duplicate node names: {', '.join(dupes)}")
    if b.x_vars & b.mp_vars:
        raise ModelError(
            "variable kinds overlap: " + ", ".join(sorted(b.x_vars & b.mp_vars))
        )
    known = set(names)
    for n in b.nodes:
        if len(set(n.states)) != len(n.states):
            raise ModelError(f"node {n.name!r} has duplicate states")
        if not n.states:
            raise ModelError(f"node {n.name!r} has no states")
        for p in n.parents:
            if p not in known:
                raise ModelError(f"node {n.name!r} references unknown parent {p!r}")
        _check_table(b, n)
    _toposort(b.nodes)  # raises on cycles
    for mp, spec in b.marginal_defs.items():
        if mp not in b.mp_vars:
            raise ModelError(f"marginal record for undeclared variable {mp!r}")
        _check_marginal_spec(b, spec)


def _check_table(b: ConstrainedBN, n: NodeSpec) -> None:
    expected = 1
    parent_states = []
    for p in n.parents:
        ps = b.node(p).states
        parent_states.append(ps)
        expected *= len(ps)
    combos = set(_cartesian(parent_states))
    seen = set(n.table.keys())
    if seen != combos:
        raise ModelError(
            f"table for node {n.name!r} is not total: expected {expected} parent "
            f"combinations, found {len(seen)}"
        )
    for combo, row in n.table.items():
        if set(row.keys()) != set(n.states):
            raise ModelError(f"table row {combo!r} of node {n.name!r} misses states")
        for state, term in row.items():
            bad = term_vars(term) - b.x_vars
            if bad:
                raise ModelError(
                    f"table entry {n.name!r}{combo!r}->{state!r} uses variables "
                    f"outside the probability-variable set: {', '.join(sorted(bad))}"
                )
            rf = to_rational_fn(term)
            if not rf.is_polynomial():
                raise ModelError(
                    f"table entry {n.name!r}{combo!r}->{state!r} has a "
                    "non-constant denominator"
                )


def _check_marginal_spec(b: ConstrainedBN, spec: MarginalSpec) -> None:
    target = b.node(spec.target_node)
    if spec.target_state not in target.states:
        raise ModelError(
            f"marginal target state {spec.target_state!r} not a state of {spec.target_node!r}"
        )
    for node, state in spec.evidence:
        if node == spec.target_node:
            raise ModelError("marginal evidence must not mention the target node")
        if state not in b.node(node).states:
            raise ModelError(f"evidence state {state!r} not a state of {node!r}")


def _cartesian(state_lists: Sequence[Sequence[str]]):
    if not state_lists:
        yield ()
        return
    for head in state_lists[0]:
        for rest in _cartesian(state_lists[1:]):
            yield (head,) + rest


def _toposort(nodes: Sequence[NodeSpec]) -> list[str]:
    order: list[str] = []
    marks: dict[str, int] = {}
    by_name = {n.name: n for n in nodes}

    def visit(name: str, trail: tuple[str, ...]):
        state = marks.get(name, 0)
        if state == 2:
            return
        if state == 1:
            cycle = " -> ".join(trail + (name,))
            raise ModelError(f"cycle detected: {cycle}")
        marks[name] = 1
        for p in by_name[name].parents:
            visit(p, trail + (name,))
        marks[name] = 2
        order.append(name)

    for n in nodes:
        visit(n.name, ())
    return order


def topological_order(b: ConstrainedBN) -> list[str]:
    return _toposort(b.nodes)


def model_to_dict(b: ConstrainedBN) -> dict:
    nodes = []
    for n in b.nodes:
        table = {}
        for combo in sorted(n.table.keys()):
            for state in n.states:
                table[_parent_key(combo, state)] = term_to_text(n.table[combo][state])
        nodes.append(
            {
                "name": n.name,
                "states": list(n.states),
                "parents": list(n.parents),
                "table": table,
            }
        )
    marginals = {
        mp: {
            "node": spec.target_node,
            "state": spec.target_state,
            "evidence": dict(spec.evidence),
        }
        for mp, spec in sorted(b.marginal_defs.items())
    }
    return {
        "nodes": nodes,
        "variables": {"x": sorted(b.x_vars), "mp": sorted(b.mp_vars)},
        "constraints": [constraint_to_text(c) for c in b.constraints],
        "marginals": marginals,
    }


def model_from_dict(doc: Mapping) -> ConstrainedBN:
    try:
        raw_nodes = doc["nodes"]
        variables = doc["variables"]
        raw_constraints = doc["constraints"]
    except (KeyError, TypeError) as exc:
        raise ModelError(f"model document misses required key: {exc}") from None
    x_vars = list(variables.get("x", []))
    mp_vars = list(variables.get("mp", []))
    kinds = {v: VarKind.PROB for v in x_vars}
    kinds.update({v: VarKind.MARGINAL for v in mp_vars})

    nodes = []
    for rn in raw_nodes:
        states = tuple(rn["states"])
        parents = tuple(rn.get("parents", []))
        table: dict[tuple[str, ...], dict[str, Term]] = {}
        for key, src in rn["table"].items():
            combo, state = _split_key(key)
            table.setdefault(combo, {})[state] = parse_term(src, kinds)
        nodes.append(NodeSpec(rn["name"], states, parents, table))

    constraints = tuple(parse_constraint(src, kinds) for src in raw_constraints)
    marginal_defs = {}
    for mp, raw in doc.get("marginals", {}).items():
        marginal_defs[mp] = MarginalSpec.make(
            raw["node"], raw["state"], raw.get("evidence", {})
        )
    return make_model(nodes, x_vars, mp_vars, constraints, marginal_defs)


def load_model(path) -> ConstrainedBN:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"not valid JSON: {exc}") from None
    return model_from_dict(doc)


def save_model(b: ConstrainedBN, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(b), fh, indent=2)
        fh.write("\n")


def model_text(b: ConstrainedBN) -> str:
    return json.dumps(model_to_dict(b), indent=2) + "\n"


# --------------------------------------------------------------------------
# Well-formedness


def defining_equation_of(c: Constraint, mp_vars: frozenset[str]) -> Optional[str]:
    """The marginal variable a constraint defines, if it has the shape
    mp = t or mp*t = t' (in either orientation) with t, t' free of
    marginal variables."""

    def mp_free(t: Term) -> bool:
        return not (term_vars(t) & mp_vars)

    def bare_mp(t: Term) -> Optional[str]:
        if isinstance(t, Var) and t.name in mp_vars:
            return t.name
        return None

    def mp_product(t: Term) -> Optional[str]:
        if isinstance(t, Mul):
            left, right = bare_mp(t.left), bare_mp(t.right)
            if left and mp_free(t.right):
                return left
            if right and mp_free(t.left):
                return right
        return None

    if not isinstance(c, Eq):
        return None
    for lhs, rhs in ((c.left, c.right), (c.right, c.left)):
        name = bare_mp(lhs) or mp_product(lhs)
        if name and mp_free(rhs):
            return name
    return None


def validate_well_formed(b: ConstrainedBN) -> list[Violation]:
    """Empty list iff (a) the declared variables are exactly those occurring
    in the constraint set and (b) every marginal variable has exactly one
    defining equation whose sides are free of marginal variables."""
    violations: list[Violation] = []
    declared = b.x_vars | b.mp_vars
    used: set[str] = set()
    for c in b.constraints:
        used |= constraint_vars(c)
    for v in sorted(used - declared):
        violations.append(Violation(v, "1(a)", "variable not in X"))
    for v in sorted(declared - used):
        violations.append(
            Violation(v, "1(a)", "declared variable occurs in no constraint")
        )

    counts: dict[str, int] = {mp: 0 for mp in b.mp_vars}
    for c in b.constraints:
        name = defining_equation_of(c, b.mp_vars)
        if name is not None:
            counts[name] += 1
    for mp in sorted(b.mp_vars):
        k = counts[mp]
        if k == 0:
            violations.append(Violation(mp, "1(b)", "no defining equation"))
        elif k > 1:
            violations.append(Violation(mp, "1(b)", f"multiple definitions ({k})"))
    # an Eq mentioning an mp on both sides defines nothing but may mask 1(b)
    for c in b.constraints:
        if isinstance(c, Eq) and defining_equation_of(c, b.mp_vars) is None:
            both = constraint_vars(c) & b.mp_vars
            for mp in sorted(both):
                if counts.get(mp) == 0:
                    violations.append(
                        Violation(
                            mp,
                            "1(b)",
                            "equation mentions the variable but its other side "
                            "contains a marginal variable",
                        )
                    )
    # deduplicate (the masking scan can repeat the no-definition case)
    seen = set()
    unique = []
    for v in violations:
        key = (v.var, v.rule, v.detail)
        if key not in seen:
            seen.add(key)
            unique.append(v)
    return unique


# --------------------------------------------------------------------------
# Concretization and soundness


def concretize(b: ConstrainedBN, assignment: Assignment) -> ConcreteBN:
    """Evaluate every table entry at the assignment.

    The assignment must bind all probability variables and satisfy every
    constraint it can be evaluated against (all of them, when it also binds
    the marginal variables).  The result is checked to be a stack of genuine
    probability tables.
    """
    missing = sorted(b.x_vars - set(assignment))
    if missing:
        raise ModelError(f"assignment misses variables: {', '.join(missing)}")
    bound = set(assignment)
    for c in b.constraints:
        if constraint_vars(c) <= bound and not holds(c, assignment):
            raise ModelError(f"assignment violates constraint: {constraint_to_text(c)}")

    tables: dict[str, dict[tuple[str, ...], dict[str, Fraction]]] = {}
    for n in b.nodes:
        tables[n.name] = {}
        for combo, row in n.table.items():
            out_row: dict[str, Fraction] = {}
            for state, term in row.items():
                v = evaluate(term, assignment)
                if not 0 <= v <= 1:
                    raise ModelError(
                        f"entry {n.name!r}{combo!r}->{state!r} evaluates to {v}, "
                        "outside [0, 1]"
                    )
                out_row[state] = v
            if sum(out_row.values()) != 1:
                raise ModelError(
                    f"row {combo!r} of node {n.name!r} sums to "
                    f"{sum(out_row.values())}, not 1"
                )
            tables[n.name][combo] = out_row
    return ConcreteBN(nodes=b.nodes, tables=tables)


def soundness_violation_atoms(b: ConstrainedBN) -> list[Constraint]:
    """Atoms whose satisfiability (under C) witnesses unsoundness.

    Rows whose entries are constants in [0, 1] and whose sum is identically
    the constant 1 are discharged symbolically and produce no atoms.
    """
    from .terms import Gt, Leq, Lt

    atoms: list[Constraint] = []
    zero = parse_term("0")
    one = parse_term("1")
    for n in b.nodes:
        for combo in sorted(n.table.keys()):
            row = n.table[combo]
            row_sum = None
            for state in n.states:
                term = row[state]
                p = to_polynomial(term)
                row_sum = p if row_sum is None else row_sum + p
                if p.is_const():
                    if not 0 <= p.const_value() <= 1:
                        # out of range at every assignment; any satisfying
                        # assignment witnesses unsoundness
                        atoms.append(Leq(zero, zero))
                    continue
                atoms.append(Lt(term, zero))
                atoms.append(Gt(term, one))
            if not (row_sum.is_const() and row_sum.const_value() == 1):
                sum_term = row_sum.to_term()
                atoms.append(Lt(sum_term, one))
                atoms.append(Gt(sum_term, one))
    return atoms


def check_sound(b: ConstrainedBN, oracle) -> "SoundnessVerdict":
    """Sound iff no constraint-satisfying assignment produces a table entry
    outside [0, 1] or a row sum different from 1."""
    from .logic import Verdict, judge_may
    from .terms import Or

    atoms = soundness_violation_atoms(b)
    if not atoms:
        return SoundnessVerdict("sound", None)
    phi = atoms[0]
    for a in atoms[1:]:
        phi = Or(phi, a)
    verdict = judge_may(b, phi, oracle)
    if verdict.status == "sat":
        return SoundnessVerdict("unsound", verdict.witness)
    if verdict.status == "unsat":
        return SoundnessVerdict("sound", None)
    return SoundnessVerdict("unknown", None)


@dataclass(frozen=True)
class SoundnessVerdict:
    status: str  # sound | unsound | unknown
    witness: Optional[object]
