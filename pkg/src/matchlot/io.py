"""File formats: instances, assignment matrices, matchings, decompositions.

Everything is JSON.  Probabilities and lottery weights are serialised as
exact ``"p/q"`` strings (plain integers when the denominator is one), so a
round trip through disk never loses precision.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .core import (
    Decomposition,
    Instance,
    Matching,
    ProbabilisticAssignment,
    validate_instance,
)


def format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_fraction(text: str) -> Fraction:
    return Fraction(text)


def instance_to_mapping(instance: Instance) -> dict:
    return {
        "objects": [
            {"id": obj, "capacity": cap}
            for obj, cap in zip(instance.objects, instance.capacities)
        ],
        "agents": [
            {"id": agent, "prefs": list(prefs)}
            for agent, prefs in zip(instance.agents, instance.preferences)
        ],
    }


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(instance_to_mapping(instance), indent=2) + "\n", encoding="utf-8"
    )


def load_instance(path: str | Path) -> Instance:
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    return validate_instance(raw)


def assignment_to_mapping(
    instance: Instance, assignment: ProbabilisticAssignment
) -> dict:
    return {
        "agents": list(instance.agents),
        "objects": list(instance.objects),
        "matrix": [
            [format_fraction(v) for v in row] for row in assignment.probs
        ],
    }


def save_assignment(
    instance: Instance, assignment: ProbabilisticAssignment, path: str | Path
) -> None:
    Path(path).write_text(
        json.dumps(assignment_to_mapping(instance, assignment), indent=2) + "\n",
        encoding="utf-8",
    )


def load_assignment(instance: Instance, path: str | Path) -> ProbabilisticAssignment:
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    if list(raw["agents"]) != list(instance.agents) or list(raw["objects"]) != list(
        instance.objects
    ):
        raise ValueError("assignment file does not match the instance's labels")
    return ProbabilisticAssignment(
        tuple(
            tuple(parse_fraction(cell) for cell in row) for row in raw["matrix"]
        )
    )


def matching_to_mapping(instance: Instance, matching: Matching) -> dict:
    return {"assignment": matching.as_pairs(instance)}


def load_matching(instance: Instance, path: str | Path) -> Matching:
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    pairs = raw["assignment"] if "assignment" in raw else raw
    assignment: list[int | None] = [None] * instance.n_agents
    for agent, obj in pairs.items():
        assignment[instance.agent_index[agent]] = instance.object_index[obj]
    return Matching(tuple(assignment))


def save_matching(instance: Instance, matching: Matching, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(matching_to_mapping(instance, matching), indent=2) + "\n",
        encoding="utf-8",
    )


def decomposition_to_mapping(
    instance: Instance, decomposition: Decomposition
) -> dict:
    return {
        "terms": [
            {
                "weight": format_fraction(weight),
                "assignment": matching.as_pairs(instance),
            }
            for weight, matching in decomposition.terms
        ]
    }


def save_decomposition(
    instance: Instance, decomposition: Decomposition, path: str | Path
) -> None:
    Path(path).write_text(
        json.dumps(decomposition_to_mapping(instance, decomposition), indent=2) + "\n",
        encoding="utf-8",
    )


def load_decomposition(instance: Instance, path: str | Path) -> Decomposition:
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    terms = []
    for term in raw["terms"]:
        weight = parse_fraction(term["weight"])
        assignment: list[int | None] = [None] * instance.n_agents
        for agent, obj in term["assignment"].items():
            assignment[instance.agent_index[agent]] = instance.object_index[obj]
        terms.append((weight, Matching(tuple(assignment))))
    return Decomposition(tuple(terms))
