"""Bundled example models.

The two lawn models (one with a binary rain node made symbolic through a
shared variable, one refining rain into three intensities) exercise every
analysis the package offers; the detector pair and the inspection toy are
small models for the threshold-agreement and sensitivity workflows.
"""

from __future__ import annotations

from .inference import install_marginal
from .model import ConstrainedBN, MarginalSpec, NodeSpec, make_model
from .terms import parse_constraint, parse_term


def _node(name, states, parents, rows):
    """rows: {parent_combo: [expr per state]}"""
    table = {}
    for combo, exprs in rows.items():
        table[combo] = {
            state: parse_term(src) for state, src in zip(states, exprs)
        }
    return NodeSpec(name, tuple(states), tuple(parents), table)


def grass_wet_base() -> ConstrainedBN:
    """Two symbolic tables over a shared variable x: the sprinkler runs
    half as often as it rains.  Constraints bound x and record that the
    symbolic rows are distributions."""
    nodes = [
        _node("sprinkler", ["on", "off"], [], {(): ["0.5*x", "1-0.5*x"]}),
        _node("rain", ["t", "f"], [], {(): ["x", "1-x"]}),
        _node(
            "holmes_wet",
            ["t", "f"],
            ["sprinkler", "rain"],
            {
                ("off", "f"): ["0.05", "0.95"],
                ("off", "t"): ["0.7", "0.3"],
                ("on", "f"): ["0.95", "0.05"],
                ("on", "t"): ["0.99", "0.01"],
            },
        ),
        _node(
            "watson_wet",
            ["t", "f"],
            ["rain"],
            {("f",): ["0.05", "0.95"], ("t",): ["0.7", "0.3"]},
        ),
    ]
    constraints = [
        parse_constraint("0.1 <= x"),
        parse_constraint("x <= 0.3"),
        parse_constraint("0.5*x + (1-0.5*x) = 1"),
        parse_constraint("x + (1-x) = 1"),
    ]
    return make_model(nodes, ["x"], [], constraints)


def grass_wet() -> ConstrainedBN:
    """grass_wet_base with mp_H = p(holmes_wet=t) and
    mp_W = p(holmes_wet=t | watson_wet=t) installed."""
    b = grass_wet_base()
    b = install_marginal(b, MarginalSpec.make("holmes_wet", "t"), "mp_H")
    b = install_marginal(
        b, MarginalSpec.make("holmes_wet", "t", {"watson_wet": "t"}), "mp_W"
    )
    return b


def rain_refined_base() -> ConstrainedBN:
    """Same DAG shape with rain split into heavy/light/none; the rain row
    is y, 4y, 1-5y and the sprinkler probability is a fresh variable z."""
    nodes = [
        _node("sprinkler", ["on", "off"], [], {(): ["z", "1-z"]}),
        _node("rain", ["heavy", "light", "none"], [], {(): ["y", "4*y", "1-5*y"]}),
        _node(
            "holmes_wet",
            ["t", "f"],
            ["sprinkler", "rain"],
            {
                ("off", "none"): ["0.05", "0.95"],
                ("off", "light"): ["0.65", "0.35"],
                ("off", "heavy"): ["0.9", "0.1"],
                ("on", "none"): ["0.95", "0.05"],
                ("on", "light"): ["0.95", "0.05"],
                ("on", "heavy"): ["0.99", "0.01"],
            },
        ),
        _node(
            "watson_wet",
            ["t", "f"],
            ["rain"],
            {
                ("none",): ["0.05", "0.95"],
                ("light",): ["0.65", "0.35"],
                ("heavy",): ["0.9", "0.1"],
            },
        ),
    ]
    constraints = [
        parse_constraint("0.1 <= 5*y"),
        parse_constraint("5*y <= 0.3"),
        parse_constraint("z + (1-z) = 1"),
        parse_constraint("y + 4*y + (1-5*y) = 1"),
    ]
    return make_model(nodes, ["y", "z"], [], constraints)


def rain_refined() -> ConstrainedBN:
    b = rain_refined_base()
    b = install_marginal(b, MarginalSpec.make("holmes_wet", "t"), "mp_Hp")
    b = install_marginal(
        b, MarginalSpec.make("holmes_wet", "t", {"watson_wet": "t"}), "mp_Wp"
    )
    return b


def detector(var: str, low_rate: str, high_rate: str, mp_name: str) -> ConstrainedBN:
    nodes = [
        _node("skill", ["low", "high"], [], {(): [var, f"1-{var}"]}),
        _node(
            "alarm",
            ["yes", "no"],
            ["skill"],
            {
                ("low",): [low_rate, f"1-{low_rate}"],
                ("high",): [high_rate, f"1-{high_rate}"],
            },
        ),
    ]
    constraints = [
        parse_constraint(f"0.1 <= {var}"),
        parse_constraint(f"{var} <= 0.8"),
        parse_constraint(f"{var} + (1-{var}) = 1"),
    ]
    b = make_model(nodes, [var], [], constraints)
    return install_marginal(b, MarginalSpec.make("alarm", "yes"), mp_name)


def detector_a() -> ConstrainedBN:
    return detector("x", "0.2", "0.9", "mp_a")


def detector_b() -> ConstrainedBN:
    return detector("y", "0.4", "0.95", "mp_b")


def inspection_toy() -> ConstrainedBN:
    """Three-way capability node sliding probability mass between its low
    and high states around a fixed middle; a binary outcome depends on it."""
    nodes = [
        _node(
            "capability",
            ["low", "med", "high"],
            [],
            {(): ["x", "0.3333", "0.6667-x"]},
        ),
        _node(
            "found",
            ["yes", "no"],
            ["capability"],
            {
                ("low",): ["0.1", "0.9"],
                ("med",): ["0.55", "0.45"],
                ("high",): ["0.85", "0.15"],
            },
        ),
    ]
    constraints = [
        parse_constraint("0.05 <= x"),
        parse_constraint("x <= 0.6"),
        parse_constraint("x + 0.3333 + (0.6667-x) = 1"),
    ]
    return make_model(nodes, ["x"], [], constraints)


BUNDLED = {
    "grass_wet": grass_wet,
    "rain_refined": rain_refined,
    "detector_a": detector_a,
    "detector_b": detector_b,
    "inspection_toy": inspection_toy,
}
