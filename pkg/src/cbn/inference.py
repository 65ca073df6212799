"""Symbolic marginal computation.

A division-free junction tree pass over polynomial-valued potentials
produces, for any (conditional) marginal, a numerator and denominator
polynomial over the probability variables together with the defining
constraints for a marginal variable.  A brute-force joint enumeration
over concrete networks serves as the testing oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .model import ConcreteBN, ConstrainedBN, MarginalSpec, ModelError, make_model
from .poly import Polynomial, to_polynomial
from .terms import Constraint, Eq, Gt, Mul, Var, VarKind

_ONE = Polynomial.const(1)


class InferenceError(Exception):
    pass


class CliqueTooLarge(InferenceError):
    def __init__(self, clique: tuple[str, ...], size: int, cap: int):
        super().__init__(
            f"clique {'+'.join(clique)} has {size} symbolic entries, "
            f"over the cap of {cap}"
        )
        self.clique = clique
        self.size = size
        self.cap = cap


@dataclass(frozen=True)
class MarginalDefinition:
    """mp·D = N (or mp = N when D normalizes to 1), with N and D free of
    marginal variables."""

    mp: str
    numerator: Polynomial
    denominator: Polynomial
    constraints: tuple[Constraint, ...]


# --------------------------------------------------------------------------
# Brute-force oracle


@dataclass(frozen=True)
class JointTable:
    nodes: tuple[str, ...]
    states: Mapping[str, tuple[str, ...]]
    probs: Mapping[tuple[str, ...], Fraction]


def enumerate_joint(c: ConcreteBN, cap: int = 10**6) -> JointTable:
    """Exact chain-rule product over every full state tuple."""
    names = [n.name for n in c.nodes]
    states = {n.name: n.states for n in c.nodes}
    size = 1
    for n in c.nodes:
        size *= len(n.states)
        if size > cap:
            raise InferenceError(f"state space exceeds cap ({cap})")
    index = {name: i for i, name in enumerate(names)}
    probs: dict[tuple[str, ...], Fraction] = {}
    for combo in itertools.product(*(states[n] for n in names)):
        p = Fraction(1)
        for node in c.nodes:
            parent_combo = tuple(combo[index[par]] for par in node.parents)
            p *= c.tables[node.name][parent_combo][combo[index[node.name]]]
            if p == 0:
                break
        if p != 0:
            probs[combo] = p
    return JointTable(tuple(names), states, probs)


def query_joint(joint: JointTable, spec: MarginalSpec) -> Fraction:
    """Unconditional: sum of matching entries.  Conditional: ratio of sums."""
    idx = {name: i for i, name in enumerate(joint.nodes)}
    if spec.target_node not in idx:
        raise InferenceError(f"unknown node {spec.target_node!r}")
    evidence = spec.evidence_map

    def matches(combo, with_target):
        for node, state in evidence.items():
            if combo[idx[node]] != state:
                return False
        if with_target and combo[idx[spec.target_node]] != spec.target_state:
            return False
        return True

    num = sum((p for c, p in joint.probs.items() if matches(c, True)), Fraction(0))
    if not evidence:
        return num
    den = sum((p for c, p in joint.probs.items() if matches(c, False)), Fraction(0))
    if den == 0:
        raise InferenceError("evidence has zero probability")
    return num / den


# --------------------------------------------------------------------------
# Graph machinery (exposed for testing)


def moralize(b: ConstrainedBN) -> dict[str, set[str]]:
    """Undirected graph connecting each node with its parents and the
    parents with each other."""
    adj: dict[str, set[str]] = {n.name: set() for n in b.nodes}
    for n in b.nodes:
        family = list(n.parents) + [n.name]
        for a, c in itertools.combinations(family, 2):
            adj[a].add(c)
            adj[c].add(a)
    return adj


def triangulate(adj: Mapping[str, set[str]]):
    """Min-fill elimination with lexicographic tie-breaking.

    Returns (elimination order, fill-in edges, elimination cliques).
    """
    work = {v: set(ns) for v, ns in adj.items()}
    order: list[str] = []
    fill: list[tuple[str, str]] = []
    cliques: list[frozenset[str]] = []

    def fill_cost(v: str) -> int:
        ns = sorted(work[v])
        return sum(
            1
            for a, c in itertools.combinations(ns, 2)
            if c not in work[a]
        )

    while work:
        v = min(sorted(work), key=lambda u: (fill_cost(u), u))
        ns = sorted(work[v])
        cliques.append(frozenset([v] + ns))
        for a, c in itertools.combinations(ns, 2):
            if c not in work[a]:
                work[a].add(c)
                work[c].add(a)
                fill.append((a, c))
        for nb in ns:
            work[nb].discard(v)
        del work[v]
        order.append(v)

    maximal = [c for c in cliques if not any(c < other for other in cliques)]
    unique: list[frozenset[str]] = []
    for c in maximal:
        if c not in unique:
            unique.append(c)
    return order, fill, sorted(tuple(sorted(c)) for c in unique)


@dataclass(frozen=True)
class JunctionTree:
    cliques: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[int, int], ...]  # i < j, separator = intersection

    def separator(self, i: int, j: int) -> tuple[str, ...]:
        return tuple(sorted(set(self.cliques[i]) & set(self.cliques[j])))

    def neighbors(self) -> dict[int, list[int]]:
        nb: dict[int, list[int]] = {i: [] for i in range(len(self.cliques))}
        for i, j in self.edges:
            nb[i].append(j)
            nb[j].append(i)
        return nb


def build_junction_tree(cliques: Sequence[tuple[str, ...]]) -> JunctionTree:
    """Maximum-separator-weight spanning forest over the cliques."""
    cliques = tuple(tuple(sorted(c)) for c in cliques)
    candidates = []
    for i, j in itertools.combinations(range(len(cliques)), 2):
        w = len(set(cliques[i]) & set(cliques[j]))
        if w:
            candidates.append((-w, i, j))
    candidates.sort()

    parent = list(range(len(cliques)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for _, i, j in candidates:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j))
    return JunctionTree(cliques, tuple(sorted(edges)))


def running_intersection_holds(tree: JunctionTree) -> bool:
    """For every pair of cliques, their intersection must be contained in
    every clique on the (forest) path between them."""
    nb = tree.neighbors()
    n = len(tree.cliques)

    def path(i, j):
        prev = {i: None}
        stack = [i]
        while stack:
            u = stack.pop()
            if u == j:
                out = []
                while u is not None:
                    out.append(u)
                    u = prev[u]
                return out
            for v in nb[u]:
                if v not in prev:
                    prev[v] = u
                    stack.append(v)
        return None

    for i, j in itertools.combinations(range(n), 2):
        shared = set(tree.cliques[i]) & set(tree.cliques[j])
        if not shared:
            continue
        p = path(i, j)
        if p is None:
            return False  # shared variables across components
        if any(not shared <= set(tree.cliques[k]) for k in p):
            return False
    return True


# --------------------------------------------------------------------------
# Symbolic potentials


@dataclass(frozen=True)
class Factor:
    scope: tuple[str, ...]
    entries: Mapping[tuple[str, ...], Polynomial]  # absent entries are zero


UNIT_FACTOR = Factor((), {(): _ONE})


def factor_multiply(a: Factor, b: Factor) -> Factor:
    scope = tuple(sorted(set(a.scope) | set(b.scope)))
    pos = {v: i for i, v in enumerate(scope)}
    shared = tuple(v for v in a.scope if v in b.scope)

    def project(entry_scope, key):
        lookup = dict(zip(entry_scope, key))
        return tuple(lookup[v] for v in shared)

    by_shared: dict[tuple[str, ...], list[tuple[tuple[str, ...], Polynomial]]] = {}
    for key, poly in b.entries.items():
        by_shared.setdefault(project(b.scope, key), []).append((key, poly))

    out: dict[tuple[str, ...], Polynomial] = {}
    for akey, apoly in a.entries.items():
        for bkey, bpoly in by_shared.get(project(a.scope, akey), []):
            merged = dict(zip(a.scope, akey))
            merged.update(zip(b.scope, bkey))
            key = tuple(merged[v] for v in scope)
            prod = apoly * bpoly
            if key in out:
                prod = out[key] + prod
            if prod:
                out[key] = prod
            else:
                out.pop(key, None)
    return Factor(scope, out)


def factor_marginalize(f: Factor, keep: Sequence[str]) -> Factor:
    keep = tuple(v for v in f.scope if v in set(keep))
    idx = [f.scope.index(v) for v in keep]
    out: dict[tuple[str, ...], Polynomial] = {}
    for key, poly in f.entries.items():
        k = tuple(key[i] for i in idx)
        s = out.get(k)
        s = poly if s is None else s + poly
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return Factor(keep, out)


def factor_restrict(f: Factor, node: str, state: str) -> Factor:
    if node not in f.scope:
        return f
    i = f.scope.index(node)
    return Factor(f.scope, {k: p for k, p in f.entries.items() if k[i] == state})


def factor_mass(f: Factor) -> Polynomial:
    total = Polynomial()
    for poly in f.entries.values():
        total = total + poly
    return total


def _cpt_factor(b: ConstrainedBN, node) -> Factor:
    scope = tuple(sorted(set(node.parents) | {node.name}))
    order = list(node.parents) + [node.name]
    perm = [order.index(v) for v in scope]
    entries = {}
    for combo, row in node.table.items():
        for state, term in row.items():
            full = list(combo) + [state]
            key = tuple(full[i] for i in perm)
            poly = to_polynomial(term)
            if poly:
                entries[key] = poly
    return Factor(scope, entries)


# --------------------------------------------------------------------------
# Propagation


def propagate(
    tree: JunctionTree,
    potentials: Sequence[Factor],
    evidence: Mapping[str, str] = (),
) -> list[Factor]:
    """Two-pass sum-product over the forest; returns one belief per clique.

    All arithmetic is polynomial addition and multiplication; no division
    happens anywhere in the pass.
    """
    potentials = list(potentials)
    for node, state in dict(evidence).items():
        potentials = [factor_restrict(f, node, state) for f in potentials]

    nb = tree.neighbors()
    messages: dict[tuple[int, int], Factor] = {}

    def send(i: int, j: int) -> None:
        if (i, j) in messages:
            return
        prod = potentials[i]
        for k in nb[i]:
            if k != j:
                send(k, i)
                prod = factor_multiply(prod, messages[(k, i)])
        sep = set(tree.cliques[i]) & set(tree.cliques[j])
        messages[(i, j)] = factor_marginalize(prod, tuple(sorted(sep)))

    beliefs = []
    for i in range(len(tree.cliques)):
        belief = potentials[i]
        for k in nb[i]:
            send(k, i)
            belief = factor_multiply(belief, messages[(k, i)])
        beliefs.append(belief)
    return beliefs


def _components(tree: JunctionTree) -> list[list[int]]:
    nb = tree.neighbors()
    seen: set[int] = set()
    comps = []
    for start in range(len(tree.cliques)):
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in nb[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        comps.append(sorted(comp))
    return comps


@dataclass(frozen=True)
class SymbolicPass:
    tree: JunctionTree
    beliefs: list[Factor]

    def clique_for(self, node: str) -> int:
        holding = [
            (len(c), c, i) for i, c in enumerate(self.tree.cliques) if node in c
        ]
        if not holding:
            raise InferenceError(f"no clique contains node {node!r}")
        return min(holding)[2]


def run_symbolic_pass(
    b: ConstrainedBN,
    evidence: Mapping[str, str] = (),
    width_cap: int = 10**5,
) -> SymbolicPass:
    states_of = {n.name: n.states for n in b.nodes}
    adj = moralize(b)
    _, _, cliques = triangulate(adj)
    worst = None
    for c in cliques:
        size = 1
        for v in c:
            size *= len(states_of[v])
        if worst is None or size > worst[1]:
            worst = (c, size)
        if size > width_cap:
            raise CliqueTooLarge(worst[0], worst[1], width_cap)
    tree = build_junction_tree(cliques)

    assigned: list[list[Factor]] = [[] for _ in tree.cliques]
    for node in b.nodes:
        family = set(node.parents) | {node.name}
        home = min(
            i for i, c in enumerate(tree.cliques) if family <= set(c)
        )
        assigned[home].append(_cpt_factor(b, node))

    potentials = []
    for i in range(len(tree.cliques)):
        f = UNIT_FACTOR
        for g in assigned[i]:
            f = factor_multiply(f, g)
        potentials.append(f)

    beliefs = propagate(tree, potentials, evidence)
    return SymbolicPass(tree, beliefs)


def symbolic_marginal(
    b: ConstrainedBN,
    spec: MarginalSpec,
    name: str = "mp",
    denominator_guard: bool = True,
    width_cap: int = 10**5,
) -> MarginalDefinition:
    """Numerator and denominator polynomials for the requested marginal,
    with the constraints that pin the marginal variable's meaning."""
    target = b.node(spec.target_node)
    if spec.target_state not in target.states:
        raise InferenceError(
            f"{spec.target_state!r} is not a state of {spec.target_node!r}"
        )
    evidence = spec.evidence_map
    if spec.target_node in evidence:
        raise InferenceError("target node must not carry evidence")

    sym = run_symbolic_pass(b, evidence, width_cap)
    home = sym.clique_for(spec.target_node)

    comps = _components(sym.tree)
    masses = []
    target_belief = None
    for comp in comps:
        rep = comp[0] if home not in comp else home
        belief = sym.beliefs[rep]
        masses.append(factor_mass(belief))
        if home in comp:
            target_belief = belief

    numerator = factor_marginalize(target_belief, (spec.target_node,))
    n_poly = dict(numerator.entries).get((spec.target_state,), Polynomial())
    d_poly = _ONE
    for comp, mass in zip(comps, masses):
        if home in comp:
            continue
        n_poly = n_poly * mass
        d_poly = d_poly * mass
    # the target component's own mass
    home_mass = None
    for comp, mass in zip(comps, masses):
        if home in comp:
            home_mass = mass
    n_final = n_poly
    d_final = d_poly * home_mass

    if d_final.is_zero():
        raise InferenceError("evidence has zero probability in every concretization")

    mp_var = Var(name, VarKind.MARGINAL)
    if d_final.is_const():
        scale = d_final.const_value()
        n_final = n_final.scale(Fraction(1) / scale)
        d_final = _ONE
        constraints: tuple[Constraint, ...] = (Eq(mp_var, n_final.to_term()),)
    else:
        constraints = (Eq(Mul(mp_var, d_final.to_term()), n_final.to_term()),)
        if denominator_guard:
            constraints += (Gt(d_final.to_term(), Polynomial.const(0).to_term()),)
    return MarginalDefinition(name, n_final, d_final, constraints)


def install_marginal(
    b: ConstrainedBN,
    spec: MarginalSpec,
    name: str,
    denominator_guard: bool = True,
    width_cap: int = 10**5,
) -> ConstrainedBN:
    """Extend the model with a marginal variable, its defining constraints,
    and the record of what it denotes."""
    if name in b.x_vars or name in b.mp_vars:
        raise ModelError(f"variable name {name!r} already in use")
    definition = symbolic_marginal(
        b, spec, name, denominator_guard=denominator_guard, width_cap=width_cap
    )
    defs = dict(b.marginal_defs)
    defs[name] = spec
    return make_model(
        b.nodes,
        b.x_vars,
        set(b.mp_vars) | {name},
        list(b.constraints) + list(definition.constraints),
        defs,
    )
