import random
from fractions import Fraction

import pytest

from cbn.examples import grass_wet, grass_wet_base, rain_refined_base
from cbn.inference import (
    CliqueTooLarge, InferenceError, build_junction_tree, enumerate_joint,
    factor_mass, install_marginal, moralize, query_joint,
    running_intersection_holds, run_symbolic_pass, symbolic_marginal,
    triangulate,
)
from cbn.model import MarginalSpec, ModelError, NodeSpec, concretize, make_model
from cbn.poly import Polynomial, to_polynomial
from cbn.terms import parse_constraint, parse_term

F = Fraction

# Frozen expectations for the lawn model, derived independently by
# expanding the factored table products by hand:
#   p(holmes=t)               = -0.305 x^2 + 1.1 x + 0.05
#   p(holmes=t and watson=t)  =  0.079 x^2 + 0.51 x + 0.0025
#   p(watson=t)               =  0.65 x + 0.05
HOLMES_POLY = Polynomial(("x",), {(0,): F("1/20"), (1,): F("11/10"), (2,): F("-61/200")})
JOINT_POLY = Polynomial(("x",), {(0,): F("1/400"), (1,): F("51/100"), (2,): F("79/1000")})
WATSON_POLY = Polynomial(("x",), {(0,): F("1/20"), (1,): F("13/20")})


def fig1_concrete():
    return concretize(grass_wet_base(), {"x": F(1, 5)})


def test_enumerate_joint_folklore_values():
    joint = enumerate_joint(fig1_concrete())
    assert len(joint.probs) == 16
    assert sum(joint.probs.values()) == 1
    holmes = query_joint(joint, MarginalSpec.make("holmes_wet", "t"))
    assert holmes == F(1289, 5000)  # 0.2578
    cond = query_joint(
        joint,
        MarginalSpec.make("holmes_wet", "t", {"sprinkler": "off", "rain": "f"}),
    )
    assert cond == F(1, 20)  # 0.05


def test_enumerate_joint_degenerate_models():
    n = NodeSpec("n", ("a", "b"), (), {
        (): {"a": parse_term("0.4"), "b": parse_term("0.6")}
    })
    b = make_model([n], [], [], [])
    joint = enumerate_joint(concretize(b, {}))
    assert joint.probs == {("a",): F(2, 5), ("b",): F(3, 5)}

    chain = [
        NodeSpec("u", ("s", "t"), (), {(): {"s": parse_term("1"), "t": parse_term("0")}}),
        NodeSpec("v", ("s", "t"), ("u",), {
            ("s",): {"s": parse_term("0"), "t": parse_term("1")},
            ("t",): {"s": parse_term("1"), "t": parse_term("0")},
        }),
    ]
    b2 = make_model(chain, [], [], [])
    joint2 = enumerate_joint(concretize(b2, {}))
    assert joint2.probs == {("s", "t"): F(1)}


def test_enumerate_joint_cap():
    with pytest.raises(InferenceError, match="cap"):
        enumerate_joint(fig1_concrete(), cap=8)


def test_query_joint_zero_evidence():
    joint = enumerate_joint(fig1_concrete())
    spec = MarginalSpec.make("holmes_wet", "t", {"rain": "t", "sprinkler": "on"})
    assert query_joint(joint, spec) == F(99, 100)


def test_moralization_marries_parents():
    adj = moralize(grass_wet_base())
    assert "rain" in adj["sprinkler"]  # co-parents of holmes_wet
    assert "watson_wet" in adj["rain"]


def test_triangulation_deterministic_and_chordal():
    adj = moralize(grass_wet_base())
    order, fill, cliques = triangulate(adj)
    assert order == triangulate(adj)[0]
    assert all(isinstance(c, tuple) for c in cliques)
    union = set().union(*map(set, cliques))
    assert union == set(adj)


def test_junction_tree_running_intersection():
    for model in (grass_wet_base(), rain_refined_base()):
        _, _, cliques = triangulate(moralize(model))
        tree = build_junction_tree(cliques)
        assert running_intersection_holds(tree)


def test_belief_mass_is_one_without_evidence():
    sym = run_symbolic_pass(grass_wet_base())
    for belief in sym.beliefs:
        assert factor_mass(belief) == Polynomial.const(1)


def test_symbolic_marginal_reproduces_hand_expansion():
    d = symbolic_marginal(grass_wet_base(), MarginalSpec.make("holmes_wet", "t"), "mp_H")
    assert d.numerator == HOLMES_POLY
    assert d.denominator == Polynomial.const(1)
    assert [str(c) for c in d.constraints] == [
        "mp_H = -0.305*x*x + 1.1*x + 0.05"
    ]


def test_symbolic_conditional_marginal():
    d = symbolic_marginal(
        grass_wet_base(),
        MarginalSpec.make("holmes_wet", "t", {"watson_wet": "t"}),
        "mp_W",
    )
    assert d.numerator == JOINT_POLY
    assert d.denominator == WATSON_POLY
    texts = [str(c) for c in d.constraints]
    assert texts[0] == "mp_W*(0.65*x + 0.05) = 0.079*x*x + 0.51*x + 0.0025"
    assert texts[1] == "0.65*x + 0.05 > 0"


def test_denominator_guard_can_be_dropped():
    d = symbolic_marginal(
        grass_wet_base(),
        MarginalSpec.make("holmes_wet", "t", {"watson_wet": "t"}),
        "mp_W",
        denominator_guard=False,
    )
    assert len(d.constraints) == 1


def test_point_checks_at_bounds():
    d = symbolic_marginal(grass_wet_base(), MarginalSpec.make("holmes_wet", "t"))
    assert d.numerator.evaluate({"x": F(3, 10)}) == F(7051, 20000)  # 0.35255
    assert d.numerator.evaluate({"x": F(1, 10)}) == F(3139, 20000)  # 0.15695


def test_all_constant_model_matches_oracle():
    b = grass_wet_base()
    d = symbolic_marginal(b, MarginalSpec.make("watson_wet", "t", {"rain": "t"}))
    # the ratio is the constant 0.7 even though N and D stay polynomial
    value = d.numerator.evaluate({"x": F(1, 5)}) / d.denominator.evaluate({"x": F(1, 5)})
    assert value == F(7, 10)
    joint = enumerate_joint(fig1_concrete())
    assert value == query_joint(joint, MarginalSpec.make("watson_wet", "t", {"rain": "t"}))


def test_install_marginal_builds_well_formed_model():
    from cbn.model import validate_well_formed

    b = grass_wet()
    assert validate_well_formed(b) == []
    again = install_marginal(
        b, MarginalSpec.make("holmes_wet", "t"), "mp_H2"
    )
    assert validate_well_formed(again) == []
    with pytest.raises(ModelError, match="already in use"):
        install_marginal(b, MarginalSpec.make("holmes_wet", "t"), "mp_H")


def test_zero_probability_evidence_rejected():
    n = NodeSpec("n", ("a", "b"), (), {
        (): {"a": parse_term("1"), "b": parse_term("0")}
    })
    m = NodeSpec("m", ("c", "d"), ("n",), {
        ("a",): {"c": parse_term("1"), "d": parse_term("0")},
        ("b",): {"c": parse_term("0"), "d": parse_term("1")},
    })
    b = make_model([n, m], [], [], [])
    with pytest.raises(InferenceError, match="zero probability"):
        symbolic_marginal(b, MarginalSpec.make("m", "c", {"n": "b"}))


def test_clique_cap_reports_largest_clique():
    b = grass_wet_base()
    with pytest.raises(CliqueTooLarge) as exc:
        run_symbolic_pass(b, width_cap=4)
    assert exc.value.size > 4


# -- randomized oracle equivalence -------------------------------------------


def random_small_model(rng: random.Random):
    """<=6 nodes, <=3 states, <=2 probability variables; rows are either
    constant distributions or an x / 1-x pair padded with zeros."""
    n_nodes = rng.randint(1, 6)
    n_vars = rng.randint(0, 2)
    var_names = [f"v{i}" for i in range(n_vars)]
    nodes = []
    for i in range(n_nodes):
        states = tuple(f"s{k}" for k in range(rng.randint(1, 3)))
        pool = [n.name for n in nodes]
        parents = tuple(
            sorted(rng.sample(pool, min(len(pool), rng.randint(0, 2))))
        )
        table = {}
        combos = [()]
        for p in parents:
            ps = next(n.states for n in nodes if n.name == p)
            combos = [c + (s,) for c in combos for s in ps]
        for combo in combos:
            table[combo] = _random_row(rng, states, var_names)
        nodes.append(NodeSpec(f"n{i}", states, parents, table))
    constraints = []
    for v in var_names:
        constraints.append(parse_constraint(f"0.1 <= {v}"))
        constraints.append(parse_constraint(f"{v} <= 0.9"))
    if not var_names:
        constraints.append(parse_constraint("true"))
    return make_model(nodes, var_names, [], constraints)


def _random_row(rng, states, var_names):
    if len(states) == 1:
        return {states[0]: parse_term("1")}
    if var_names and rng.random() < 0.5:
        v = rng.choice(var_names)
        i, j = rng.sample(range(len(states)), 2)
        exprs = ["0"] * len(states)
        exprs[i] = v
        exprs[j] = f"1-{v}"
    else:
        weights = [rng.randint(0, 4) for _ in states]
        if sum(weights) == 0:
            weights[0] = 1
        total = sum(weights)
        exprs = [f"{w}/{total}" for w in weights]
    return {s: parse_term(e) for s, e in zip(states, exprs)}


def random_spec(rng: random.Random, b) -> MarginalSpec:
    target = rng.choice(b.nodes)
    evidence = {}
    others = [n for n in b.nodes if n.name != target.name]
    for n in rng.sample(others, min(len(others), rng.randint(0, 2))):
        evidence[n.name] = rng.choice(n.states)
    return MarginalSpec.make(target.name, rng.choice(target.states), evidence)


def test_oracle_equivalence_randomized():
    rng = random.Random(20240811)
    checked = 0
    for _ in range(60):
        b = random_small_model(rng)
        spec = random_spec(rng, b)
        try:
            d = symbolic_marginal(b, spec)
        except InferenceError:
            continue  # evidence impossible in every concretization
        for _ in range(3):
            assignment = {
                v: F(rng.randint(10, 90), 100) for v in sorted(b.x_vars)
            }
            concrete = concretize(b, assignment)
            joint = enumerate_joint(concrete)
            den = d.denominator.evaluate(assignment)
            if den == 0:
                continue
            symbolic = d.numerator.evaluate(assignment) / den
            try:
                direct = query_joint(joint, spec)
            except InferenceError:
                assert d.numerator.evaluate(assignment) == 0
                continue
            assert symbolic == direct
            checked += 1
    assert checked > 50
