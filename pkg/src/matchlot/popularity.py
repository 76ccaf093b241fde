"""Vote-based comparison of matchings and margin-bounded decompositions.

A matching's unpopularity margin is the largest vote advantage any rival
matching achieves against it, where every agent votes for the outcome she
prefers.  The margin of a fixed matching is the optimum of a small
transportation LP; bounding the margin of a matching that is itself being
optimised uses the dual of that LP, which is linear in the matching
variables and can replace the cardinality floor inside the pricing MIP.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .core import (
    Decomposition,
    Instance,
    Matching,
    MatchlotError,
    ProbabilisticAssignment,
    is_pareto_efficient,
)
from .lp import EQ, LE, Constraint, LinearProgram, Variable, backend_solve_mip, solve_lp
from .colgen import (
    TOLERANCE,
    Budget,
    _WEIGHT_FLOOR,
    _exact_weights,
    solve_rmp,
)
from .mechanisms import DEFAULT_SAMPLE_SIZE, sample_sd_matchings
from .pe_program import _margin_block, build_matching_program


class MarginNotDecomposableError(MatchlotError):
    """No decomposition over efficient matchings exists at any margin."""


@dataclass(frozen=True)
class ComparisonWeights:
    """Per (agent, object-or-outside) vote weights relative to a matching.

    ``+1`` when the agent prefers the alternative to her current outcome,
    ``-1`` when she prefers her current outcome, ``0`` on ties.
    """

    nu: dict[tuple[int, int | None], int]


def comparison_weights(instance: Instance, matching: Matching) -> ComparisonWeights:
    nu: dict[tuple[int, int | None], int] = {}
    for i in range(instance.n_agents):
        current = matching.assignment[i]
        options: list[int | None] = [*range(instance.n_objects), None]
        for j in options:
            if instance.prefers(i, j, current):
                nu[i, j] = 1
            elif instance.prefers(i, current, j):
                nu[i, j] = -1
            else:
                nu[i, j] = 0
    return ComparisonWeights(nu)


def phi(instance: Instance, first: Matching, second: Matching) -> int:
    """Number of agents strictly preferring their outcome in ``first``."""
    return sum(
        1
        for i in range(instance.n_agents)
        if instance.prefers(i, first.assignment[i], second.assignment[i])
    )


def unpopularity_margin(instance: Instance, matching: Matching) -> int:
    """Worst vote deficit of the matching against any rival matching.

    Maximises the net vote weight of a rival over the transportation
    polytope in which every agent is assigned to an object or the outside
    option (capacity ``|N|``).  The polytope is integral, so the LP optimum
    is the exact margin; it is never negative because the matching itself
    is a feasible rival.
    """
    n, o = instance.n_agents, instance.n_objects
    weights = comparison_weights(instance, matching).nu
    variables = []
    objective: dict[str, float] = {}
    for i in range(n):
        for j in [*range(o), None]:
            name = f"mp_{i}_{'null' if j is None else j}"
            variables.append(Variable(name, 0.0))
            if weights[i, j]:
                objective[name] = float(weights[i, j])
    constraints = []
    for i in range(n):
        coeffs = {f"mp_{i}_{'null' if j is None else j}": 1.0 for j in [*range(o), None]}
        constraints.append(Constraint(f"row_{i}", coeffs, EQ, 1.0))
    for j in range(o):
        coeffs = {f"mp_{i}_{j}": 1.0 for i in range(n)}
        constraints.append(Constraint(f"col_{j}", coeffs, LE, float(instance.capacities[j])))
    constraints.append(
        Constraint("col_null", {f"mp_{i}_null": 1.0 for i in range(n)}, LE, float(n))
    )
    program = LinearProgram(
        sense="max",
        objective=objective,
        variables=tuple(variables),
        constraints=tuple(constraints),
        name="margin",
    )
    result = solve_lp(program)
    if result.status != "optimal":
        raise MatchlotError(f"margin program ended with status {result.status!r}")
    value = result.objective
    rounded = round(value)
    if abs(value - rounded) > 1e-6:
        raise MatchlotError(f"margin optimum {value} is not integral")
    return int(rounded)


def bounded_margin_block(
    instance: Instance, omega: int
) -> tuple[list[Variable], list[Constraint]]:
    """Constraint block forcing a priced matching's margin to at most omega.

    The block references the standard matching variables ``m_i_j`` over all
    acceptable cells; attach it to a matching program built without a
    cardinality floor.  With ``omega >= |N|`` the block never binds, since
    no rival can muster more than one vote per agent.
    """
    if omega < 0:
        raise ValueError("omega must be non-negative")
    cells = [
        (i, j) for i in range(instance.n_agents) for j in instance.pref_idx[i]
    ]
    cell_var = {cell: f"m_{cell[0]}_{cell[1]}" for cell in cells}
    return _margin_block(instance, cells, cell_var, omega)


def _margin_pricing(
    instance: Instance,
    assignment: ProbabilisticAssignment,
    duals,
    omega: int,
    *,
    tolerance: float,
    time_limit: float | None,
) -> tuple[Matching | None, bool]:
    exact = assignment.probs
    support = set()
    forced = set()
    for i, row in enumerate(exact):
        for j, value in enumerate(row):
            if value > 0:
                support.add((i, j))
            if value == 1:
                forced.add((i, j))
    cost = {
        (i, j): -(duals.u.get((i, j), 0.0) + duals.v.get((i, j), 0.0))
        for (i, j) in support
    }
    constant = -duals.w
    built = build_matching_program(
        instance,
        objective=cost,
        sense="min",
        min_cardinality=None,
        enforce_pe=True,
        support=support,
        forced=forced,
        margin_limit=omega,
        name="margin_pricing",
    )
    result = backend_solve_mip(
        built.program, target=-tolerance - constant, time_limit=time_limit
    )
    if result.status == "infeasible":
        return None, True
    if result.status == "unknown":
        return None, False
    value = result.objective + constant
    if value < -tolerance:
        matching = built.decode(result)
        if not is_pareto_efficient(instance, matching):
            raise MatchlotError("margin pricing produced a non-efficient matching")
        return matching, result.status == "optimal"
    return None, result.status == "optimal"


def binary_search_margin(
    instance: Instance,
    assignment: ProbabilisticAssignment,
    *,
    samples: int = DEFAULT_SAMPLE_SIZE,
    seed: int = 0,
    budget: Budget | None = None,
    tolerance: float = TOLERANCE,
) -> tuple[int, Decomposition]:
    """Smallest worst-case unpopularity margin over efficient decompositions.

    Bisects the integer margin bound: at each candidate value the deviation
    master runs with the pool filtered to matchings of that margin or less
    and with the margin block replacing the cardinality floor in pricing.

    Raises:
        MarginNotDecomposableError: the assignment has no decomposition
            over efficient matchings at all (infeasible even unbounded).
    """
    budget = budget or Budget()
    deadline = budget.deadline()
    pool: list[Matching] = []
    seen = set()
    for matching in sample_sd_matchings(instance, samples, seed):
        if matching.assignment not in seen:
            seen.add(matching.assignment)
            pool.append(matching)
    margins = {m.assignment: unpopularity_margin(instance, m) for m in pool}

    def attempt(omega: int) -> Decomposition | None:
        columns = [m for m in pool if margins[m.assignment] <= omega]
        for _ in range(budget.max_rounds_per_k):
            solution = solve_rmp(assignment, columns, 0)
            if solution.s <= tolerance and solution.super_weight > tolerance:
                try:
                    solution = solve_rmp(
                        assignment, columns, 0, include_super=False
                    )
                except MatchlotError:
                    pass
            if solution.s <= tolerance and solution.super_weight <= tolerance:
                raw = [
                    (w, col)
                    for col, w in zip(columns, solution.weights)
                    if w > _WEIGHT_FLOOR
                ]
                return _exact_weights(raw)
            if deadline is not None and time.monotonic() > deadline:
                return None
            matching, _ = _margin_pricing(
                instance,
                assignment,
                solution,
                omega,
                tolerance=tolerance,
                time_limit=budget.pricing_time_limit,
            )
            if matching is None:
                return None
            if matching.assignment not in margins:
                margins[matching.assignment] = unpopularity_margin(instance, matching)
                pool.append(matching)
            if margins[matching.assignment] > omega:
                raise MatchlotError(
                    "margin pricing exceeded its bound: "
                    f"{margins[matching.assignment]} > {omega}"
                )
            if matching not in columns:
                columns.append(matching)
        return None

    n = instance.n_agents
    top = attempt(n)
    if top is None:
        raise MarginNotDecomposableError(
            "no decomposition over efficient matchings exists"
        )
    lo, hi = 0, n
    best = (n, top)
    while lo < hi:
        mid = (lo + hi) // 2
        found = attempt(mid)
        if found is not None:
            best = (mid, found)
            hi = mid
        else:
            lo = mid + 1
    if best[0] != lo:
        found = attempt(lo)
        if found is None:
            raise MatchlotError("margin bisection lost feasibility")
        best = (lo, found)
    return best


def _worst_margin(instance: Instance, decomposition: Decomposition) -> int:
    return max(
        unpopularity_margin(instance, matching)
        for matching in decomposition.matchings()
    )
