"""Domain model for one-sided matching.

An instance consists of agents with strict, truncated preference lists over
capacitated objects.  A preference list contains exactly the objects an
agent prefers to staying unassigned, most-preferred first; anything not
listed is worse than the outside option and is never assigned by the
mechanisms in this package.

Probabilities and lottery weights are :class:`fractions.Fraction` values
throughout this module, so recomposition of a decomposition is exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

ENUMERATION_LIMIT = 8
"""Largest agent count for which full permutation enumeration is allowed."""

Rational = int | Fraction


class MatchlotError(Exception):
    """Base class for errors raised by this package."""


class InstanceValidationError(MatchlotError):
    """Raised by :func:`validate_instance`; carries every violation found."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


class EnumerationLimitError(MatchlotError):
    """Instance too large for an operation that enumerates agent orderings."""


@dataclass(frozen=True)
class Instance:
    """A one-sided matching market.

    Attributes:
        agents: agent identifiers, in a fixed order (row order of matrices).
        objects: object identifiers, in a fixed order (column order).
        capacities: per-object capacities, aligned with ``objects``.
        preferences: per-agent tuples of object identifiers, most-preferred
            first, truncated at the outside option.  May be empty.
    """

    agents: tuple[str, ...]
    objects: tuple[str, ...]
    capacities: tuple[int, ...]
    preferences: tuple[tuple[str, ...], ...]

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @cached_property
    def object_index(self) -> dict[str, int]:
        return {obj: j for j, obj in enumerate(self.objects)}

    @cached_property
    def agent_index(self) -> dict[str, int]:
        return {agent: i for i, agent in enumerate(self.agents)}

    @cached_property
    def pref_idx(self) -> tuple[tuple[int, ...], ...]:
        """Preference lists as object indices."""
        oi = self.object_index
        return tuple(tuple(oi[o] for o in prefs) for prefs in self.preferences)

    @cached_property
    def rank(self) -> tuple[dict[int, int], ...]:
        """``rank[i][j]`` is the position of object ``j`` in agent ``i``'s list."""
        return tuple({j: t for t, j in enumerate(prefs)} for prefs in self.pref_idx)

    def prefers(self, agent: int, j: int | None, k: int | None) -> bool:
        """True iff agent strictly prefers outcome ``j`` to outcome ``k``.

        Outcomes are object indices or ``None`` (the outside option).
        Unlisted objects rank below the outside option; two distinct
        unlisted objects compare as indifferent.
        """
        ranks = self.rank[agent]
        unlisted = len(ranks)  # rank of the outside option
        rj = ranks.get(j, unlisted + 1) if j is not None else unlisted
        rk = ranks.get(k, unlisted + 1) if k is not None else unlisted
        return rj < rk


@dataclass(frozen=True)
class Matching:
    """An integral assignment: per agent, an object index or ``None``."""

    assignment: tuple[int | None, ...]

    def cardinality(self) -> int:
        """Number of assigned agents."""
        return sum(1 for j in self.assignment if j is not None)

    def object_loads(self, n_objects: int) -> list[int]:
        loads = [0] * n_objects
        for j in self.assignment:
            if j is not None:
                loads[j] += 1
        return loads

    def as_pairs(self, instance: Instance) -> dict[str, str]:
        """Identifier form, omitting unassigned agents."""
        return {
            instance.agents[i]: instance.objects[j]
            for i, j in enumerate(self.assignment)
            if j is not None
        }


@dataclass(frozen=True)
class ProbabilisticAssignment:
    """Exact rational matrix of assignment probabilities, agents x objects."""

    probs: tuple[tuple[Fraction, ...], ...]

    @property
    def n_agents(self) -> int:
        return len(self.probs)

    @property
    def n_objects(self) -> int:
        return len(self.probs[0]) if self.probs else 0

    @staticmethod
    def from_rows(rows: Iterable[Iterable[Rational]]) -> "ProbabilisticAssignment":
        return ProbabilisticAssignment(
            tuple(tuple(Fraction(v) for v in row) for row in rows)
        )

    @staticmethod
    def from_matching(matching: Matching, n_objects: int) -> "ProbabilisticAssignment":
        rows = []
        for j in matching.assignment:
            row = [Fraction(0)] * n_objects
            if j is not None:
                row[j] = Fraction(1)
            rows.append(tuple(row))
        return ProbabilisticAssignment(tuple(rows))

    def row_sums(self) -> list[Fraction]:
        return [sum(row, Fraction(0)) for row in self.probs]

    def col_sums(self) -> list[Fraction]:
        n = self.n_objects
        sums = [Fraction(0)] * n
        for row in self.probs:
            for j in range(n):
                sums[j] += row[j]
        return sums

    def support(self) -> set[tuple[int, int]]:
        return {
            (i, j)
            for i, row in enumerate(self.probs)
            for j, v in enumerate(row)
            if v > 0
        }


@dataclass(frozen=True)
class Decomposition:
    """A lottery over matchings: positive weights summing to one."""

    terms: tuple[tuple[Fraction, Matching], ...]

    def weights(self) -> list[Fraction]:
        return [w for w, _ in self.terms]

    def matchings(self) -> list[Matching]:
        return [m for _, m in self.terms]


class ConstraintStructure:
    """The quota system whose box constraints define feasible assignments.

    Contains one set per cell (quota 1), one per agent row (quota 1) and one
    per object column (quota = capacity).  ``tau`` counts how many of these
    sets currently hold an integer value; it reaches ``size`` exactly on
    integral matrices.
    """

    def __init__(self, instance: Instance):
        self.instance = instance

    @property
    def size(self) -> int:
        n, o = self.instance.n_agents, self.instance.n_objects
        return n * o + n + o

    def iter_sets(self) -> Iterator[tuple[str, tuple[tuple[int, int], ...], int]]:
        """Yields ``(label, cells, quota)`` for every constraint set."""
        inst = self.instance
        for i in range(inst.n_agents):
            for j in range(inst.n_objects):
                yield (f"cell[{i},{j}]", ((i, j),), 1)
        for i in range(inst.n_agents):
            yield (f"row[{i}]", tuple((i, j) for j in range(inst.n_objects)), 1)
        for j in range(inst.n_objects):
            yield (
                f"col[{j}]",
                tuple((i, j) for i in range(inst.n_agents)),
                inst.capacities[j],
            )

    def tau(self, assignment: ProbabilisticAssignment) -> int:
        count = 0
        for row in assignment.probs:
            for v in row:
                if v.denominator == 1:
                    count += 1
        for s in assignment.row_sums():
            if s.denominator == 1:
                count += 1
        for s in assignment.col_sums():
            if s.denominator == 1:
                count += 1
        return count


def validate_instance(raw: Mapping) -> Instance:
    """Parse and validate the mapping form of an instance.

    Expected shape::

        {"objects": [{"id": ..., "capacity": ...}],
         "agents": [{"id": ..., "prefs": [object ids, most-preferred first]}]}

    Raises:
        InstanceValidationError: listing every violation found, not just the
            first one.
    """
    violations: list[str] = []
    objects: list[str] = []
    capacities: list[int] = []
    seen_objects: set[str] = set()
    for entry in raw.get("objects", []):
        oid = str(entry.get("id"))
        cap = entry.get("capacity")
        if oid in seen_objects:
            violations.append(f"duplicate object id {oid!r}")
            continue
        seen_objects.add(oid)
        if not isinstance(cap, int) or cap < 1:
            violations.append(f"object {oid!r} has capacity {cap!r}, expected integer >= 1")
            cap = 1
        objects.append(oid)
        capacities.append(cap)

    agents: list[str] = []
    preferences: list[tuple[str, ...]] = []
    seen_agents: set[str] = set()
    for entry in raw.get("agents", []):
        aid = str(entry.get("id"))
        if aid in seen_agents:
            violations.append(f"duplicate agent id {aid!r}")
            continue
        seen_agents.add(aid)
        prefs = entry.get("prefs", [])
        cleaned: list[str] = []
        listed: set[str] = set()
        for obj in prefs:
            obj = str(obj)
            if obj not in seen_objects:
                violations.append(f"agent {aid!r} lists unknown object {obj!r}")
                continue
            if obj in listed:
                violations.append(f"agent {aid!r} has duplicate preference {obj!r}")
                continue
            listed.add(obj)
            cleaned.append(obj)
        agents.append(aid)
        preferences.append(tuple(cleaned))

    if violations:
        raise InstanceValidationError(violations)
    return Instance(
        agents=tuple(agents),
        objects=tuple(objects),
        capacities=tuple(capacities),
        preferences=tuple(preferences),
    )


def serial_dictatorship(instance: Instance, sigma: Sequence[int]) -> Matching:
    """Run the serial dictatorship rule under agent ordering ``sigma``.

    Each agent, in order, takes her most-preferred object with remaining
    capacity, or stays unassigned if her whole list is exhausted.
    """
    n = instance.n_agents
    if sorted(sigma) != list(range(n)):
        raise ValueError("sigma must be a permutation of the agent indices")
    remaining = list(instance.capacities)
    assignment: list[int | None] = [None] * n
    pref_idx = instance.pref_idx
    for i in sigma:
        for j in pref_idx[i]:
            if remaining[j] > 0:
                remaining[j] -= 1
                assignment[i] = j
                break
    return Matching(tuple(assignment))


def is_feasible(instance: Instance, matching: Matching) -> bool:
    """Capacity check; each agent holds at most one object by construction."""
    if len(matching.assignment) != instance.n_agents:
        raise ValueError("matching dimension does not match the instance")
    loads = [0] * instance.n_objects
    for j in matching.assignment:
        if j is not None:
            if j < 0 or j >= instance.n_objects:
                return False
            loads[j] += 1
    return all(loads[j] <= instance.capacities[j] for j in range(instance.n_objects))


def is_feasible_assignment(
    instance: Instance, assignment: ProbabilisticAssignment
) -> bool:
    if assignment.n_agents != instance.n_agents or (
        assignment.n_agents and assignment.n_objects != instance.n_objects
    ):
        raise ValueError("assignment dimensions do not match the instance")
    for row in assignment.probs:
        for v in row:
            if v < 0 or v > 1:
                return False
    if any(s > 1 for s in assignment.row_sums()):
        return False
    cols = assignment.col_sums()
    return all(cols[j] <= instance.capacities[j] for j in range(instance.n_objects))


def mu(assignment: ProbabilisticAssignment) -> Fraction:
    """Expected number of assigned agents: the sum of all entries."""
    total = Fraction(0)
    for row in assignment.probs:
        for v in row:
            total += v
    return total


def envy_graph(instance: Instance, matching: Matching) -> dict[int, set[int]]:
    """Directed envy edges between objects.

    There is an edge ``j -> k`` iff some agent assigned to ``j`` prefers
    ``k`` to ``j``.
    """
    edges: dict[int, set[int]] = {}
    for i, j in enumerate(matching.assignment):
        if j is None:
            continue
        for k in instance.pref_idx[i]:
            if k == j:
                break
            edges.setdefault(j, set()).add(k)
    return edges


def competitive_prices(instance: Instance, matching: Matching) -> list[int] | None:
    """Integer object prices certifying efficiency, or ``None``.

    Prices must be zero on objects with unused capacity and strictly
    increasing along envy edges.  Such prices exist iff the envy graph is
    acyclic and no envy edge points at an object with free capacity; the
    returned price of an object is then the length of the longest envy path
    ending there.
    """
    loads = matching.object_loads(instance.n_objects)
    free = [loads[j] < instance.capacities[j] for j in range(instance.n_objects)]
    edges = envy_graph(instance, matching)
    for targets in edges.values():
        if any(free[k] for k in targets):
            return None
    # Longest-path ranks via iterative DFS; a back edge means a cycle.
    n = instance.n_objects
    price = [0] * n
    state = [0] * n  # 0 unvisited, 1 on stack, 2 done
    for start in range(n):
        if state[start] != 0:
            continue
        stack: list[tuple[int, Iterator[int]]] = [(start, iter(sorted(edges.get(start, ()))))]
        state[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for succ in it:
                if state[succ] == 1:
                    return None
                if state[succ] == 0:
                    state[succ] = 1
                    stack.append((succ, iter(sorted(edges.get(succ, ())))))
                    advanced = True
                    break
            if not advanced:
                state[node] = 2
                stack.pop()
    # Relax in reverse topological order: price[k] >= price[j] + 1 on j -> k.
    order = _topological_order(n, edges)
    for j in order:
        for k in edges.get(j, ()):
            price[k] = max(price[k], price[j] + 1)
    return price


def _topological_order(n: int, edges: dict[int, set[int]]) -> list[int]:
    indeg = [0] * n
    for targets in edges.values():
        for k in targets:
            indeg[k] += 1
    queue = [j for j in range(n) if indeg[j] == 0]
    order: list[int] = []
    while queue:
        j = queue.pop()
        order.append(j)
        for k in edges.get(j, ()):
            indeg[k] -= 1
            if indeg[k] == 0:
                queue.append(k)
    return order


def is_maximal(instance: Instance, matching: Matching) -> bool:
    """No unassigned agent has an acceptable object with free capacity."""
    loads = matching.object_loads(instance.n_objects)
    for i, j in enumerate(matching.assignment):
        if j is not None:
            continue
        for k in instance.pref_idx[i]:
            if loads[k] < instance.capacities[k]:
                return False
    return True


def is_pareto_efficient(instance: Instance, matching: Matching) -> bool:
    """Efficiency certificate: maximality plus supporting integer prices.

    A matching that assigns an agent an object missing from her list is
    never efficient (she prefers the outside option), so that case is
    rejected up front.
    """
    for i, j in enumerate(matching.assignment):
        if j is not None and j not in instance.rank[i]:
            return False
    if not is_maximal(instance, matching):
        return False
    return competitive_prices(instance, matching) is not None


def enumerate_pe_matchings(
    instance: Instance, limit: int = ENUMERATION_LIMIT
) -> set[Matching]:
    """All Pareto-efficient matchings, via serial dictatorship over all orders."""
    n = instance.n_agents
    if n > limit:
        raise EnumerationLimitError(
            f"{n} agents exceeds the enumeration limit of {limit}"
        )
    found: set[Matching] = set()
    for sigma in itertools.permutations(range(n)):
        found.add(serial_dictatorship(instance, sigma))
    return found


def recompose(
    instance: Instance, decomposition: Decomposition
) -> ProbabilisticAssignment:
    """Exact convex combination of the decomposition's matchings."""
    if not decomposition.terms:
        raise ValueError("decomposition is empty")
    total = sum((w for w, _ in decomposition.terms), Fraction(0))
    if total != 1:
        raise ValueError(f"weights sum to {total}, expected exactly 1")
    n, o = instance.n_agents, instance.n_objects
    rows = [[Fraction(0)] * o for _ in range(n)]
    for weight, matching in decomposition.terms:
        for i, j in enumerate(matching.assignment):
            if j is not None:
                rows[i][j] += weight
    return ProbabilisticAssignment(tuple(tuple(row) for row in rows))


def worst_case_cardinality(decomposition: Decomposition) -> int:
    """Minimum number of assigned agents over the lottery's support."""
    if not decomposition.terms:
        raise ValueError("decomposition is empty")
    return min(m.cardinality() for _, m in decomposition.terms)
