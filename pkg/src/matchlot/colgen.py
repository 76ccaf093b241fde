"""Column generation for maximin decompositions over efficient matchings.

Two master formulations are provided.  The deviation master minimises the
largest cell-wise overshoot ``s`` of the constructed lottery above the
target assignment, using only matchings of cardinality at least ``k``; a
zero optimum certifies that the assignment decomposes over that class.
The coverage master decomposes the assignment exactly and maximises the
total weight ``alpha`` carried by matchings of cardinality at least ``k``;
``alpha = 1`` is the same certificate.  Both masters price new columns
with an efficiency-constrained matching MIP, and a binary search on ``k``
yields the maximin value ``z``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (
    Decomposition,
    Instance,
    Matching,
    MatchlotError,
    ProbabilisticAssignment,
    is_pareto_efficient,
    mu,
)
from .lp import (
    EQ,
    GE,
    LE,
    Constraint,
    LinearProgram,
    Variable,
    backend_solve_mip,
    solve_lp,
)
from .mechanisms import DEFAULT_SAMPLE_SIZE, sample_sd_matchings
from .pe_program import build_matching_program

TOLERANCE = 1e-4
_WEIGHT_FLOOR = 1e-9
_ARTIFICIAL_PENALTY = 1e4
_ACTIVATION_BATCH = 200
_INITIAL_ACTIVE = 400


class PricingInconsistencyError(MatchlotError):
    """The pricing problem returned a column the master already holds."""


@dataclass
class ColumnPool:
    """Deduplicated feasible, Pareto-efficient matchings with cached sizes."""

    columns: list[Matching] = field(default_factory=list)
    cardinalities: list[int] = field(default_factory=list)
    _index: dict[tuple, int] = field(default_factory=dict)

    def add(self, matching: Matching) -> bool:
        key = matching.assignment
        if key in self._index:
            return False
        self._index[key] = len(self.columns)
        self.columns.append(matching)
        self.cardinalities.append(matching.cardinality())
        return True

    def __len__(self) -> int:
        return len(self.columns)

    def __contains__(self, matching: Matching) -> bool:
        return matching.assignment in self._index

    def indices_with_cardinality(self, k: int) -> list[int]:
        return [t for t, c in enumerate(self.cardinalities) if c >= k]

    def position(self, matching: Matching) -> int:
        return self._index[matching.assignment]


def initial_columns(
    instance: Instance,
    k: int,
    samples: int = DEFAULT_SAMPLE_SIZE,
    seed: int = 0,
    *,
    filter_cardinality: bool = True,
) -> ColumnPool:
    """Seed a column pool from sampled serial-dictatorship runs.

    With ``filter_cardinality`` the pool keeps only matchings assigning at
    least ``k`` agents (the deviation master's eligibility rule); the
    coverage master retains everything.
    """
    pool = ColumnPool()
    for matching in sample_sd_matchings(instance, samples, seed):
        if filter_cardinality and matching.cardinality() < k:
            continue
        pool.add(matching)
    return pool


@dataclass
class RmpSolution:
    s: float
    weights: list[float]
    super_weight: float
    u: dict[tuple[int, int], float]
    v: dict[tuple[int, int], float]
    w: float


def _float_matrix(assignment: ProbabilisticAssignment) -> list[list[float]]:
    return [[float(v) for v in row] for row in assignment.probs]


def solve_rmp(
    assignment: ProbabilisticAssignment,
    columns: list[Matching],
    k: int,
    *,
    include_super: bool = True,
) -> RmpSolution:
    """Deviation master over the given columns plus the all-ones super-column.

    Minimises ``s`` subject to: the lottery covers the target probability in
    every cell, overshoots by at most ``s`` anywhere, and weights form a
    convex combination.  Cover rows for zero cells and overshoot rows for
    probability-one cells are redundant and omitted.

    With ``include_super`` disabled the master may be infeasible (raised as
    an error); the super-column variant never is.
    """
    for t, col in enumerate(columns):
        if col.cardinality() < k:
            raise ValueError(f"column {t} has cardinality below {k}")
    x = _float_matrix(assignment)
    n = assignment.n_agents
    o = assignment.n_objects
    exact = assignment.probs

    variables = [Variable("s", 0.0)]
    if include_super:
        variables.append(Variable("lam_super", 0.0))
    variables += [Variable(f"lam_{t}", 0.0) for t in range(len(columns))]

    super_entry = {"lam_super": 1.0} if include_super else {}
    cover_rows: dict[tuple[int, int], dict[str, float]] = {}
    over_rows: dict[tuple[int, int], dict[str, float]] = {}
    for i in range(n):
        for j in range(o):
            if exact[i][j] > 0:
                cover_rows[i, j] = dict(super_entry)
            if exact[i][j] < 1:
                over_rows[i, j] = {**super_entry, "s": -1.0}
    for t, col in enumerate(columns):
        name = f"lam_{t}"
        for i, j in enumerate(col.assignment):
            if j is None:
                continue
            if (i, j) in cover_rows:
                cover_rows[i, j][name] = 1.0
            if (i, j) in over_rows:
                over_rows[i, j][name] = 1.0

    constraints = []
    for (i, j), coeffs in cover_rows.items():
        constraints.append(Constraint(f"cov_{i}_{j}", coeffs, GE, x[i][j]))
    for (i, j), coeffs in over_rows.items():
        constraints.append(Constraint(f"dev_{i}_{j}", coeffs, LE, x[i][j]))
    conv = dict(super_entry)
    conv.update({f"lam_{t}": 1.0 for t in range(len(columns))})
    constraints.append(Constraint("conv", conv, EQ, 1.0))

    program = LinearProgram(
        sense="min",
        objective={"s": 1.0},
        variables=tuple(variables),
        constraints=tuple(constraints),
        name="rmp",
    )
    result = solve_lp(program)
    if result.status != "optimal":
        raise MatchlotError(f"deviation master ended with status {result.status!r}")
    u = {}
    v = {}
    for (i, j) in cover_rows:
        u[i, j] = result.duals[f"cov_{i}_{j}"]
    for (i, j) in over_rows:
        v[i, j] = result.duals[f"dev_{i}_{j}"]
    return RmpSolution(
        s=result.objective,
        weights=[result.primal[f"lam_{t}"] for t in range(len(columns))],
        super_weight=result.primal.get("lam_super", 0.0),
        u=u,
        v=v,
        w=result.duals["conv"],
    )


@dataclass
class PricingOutcome:
    matching: Matching | None
    reduced_cost: float
    proven: bool


def price_pe_matching(
    instance: Instance,
    assignment: ProbabilisticAssignment,
    duals: RmpSolution,
    k: int,
    *,
    tolerance: float = TOLERANCE,
    time_limit: float | None = None,
) -> PricingOutcome:
    """Search for an efficient matching with negative reduced cost.

    Minimises ``-sum m (u+v) - w`` over feasible, efficient matchings that
    assign at least ``k`` agents, with cells outside the target assignment's
    support excluded and probability-one cells pinned.  The search stops at
    the first column strictly below ``-tolerance``; when it runs to the end
    without one, that proves master optimality over the full class.
    """
    exact = assignment.probs
    support = set()
    forced = set()
    for i, row in enumerate(exact):
        for j, value in enumerate(row):
            if value > 0:
                support.add((i, j))
            if value == 1:
                forced.add((i, j))
    cost = {}
    for (i, j) in support:
        cost[i, j] = -(duals.u.get((i, j), 0.0) + duals.v.get((i, j), 0.0))
    constant = -duals.w
    built = build_matching_program(
        instance,
        objective=cost,
        sense="min",
        min_cardinality=k if k > 0 else None,
        enforce_pe=True,
        support=support,
        forced=forced,
        name="pricing",
    )
    result = backend_solve_mip(
        built.program,
        target=-tolerance - constant,
        time_limit=time_limit,
    )
    if result.status == "infeasible":
        return PricingOutcome(None, 0.0, proven=True)
    if result.status in ("unknown",):
        return PricingOutcome(None, 0.0, proven=False)
    value = result.objective + constant
    proven = result.status == "optimal"
    if value < -tolerance:
        matching = built.decode(result)
        if not is_pareto_efficient(instance, matching):
            raise MatchlotError("pricing produced a non-efficient matching")
        return PricingOutcome(matching, value, proven)
    return PricingOutcome(None, value, proven)


class _Bank:
    """Column pool with vectorised reduced-cost scans."""

    def __init__(self, n_objects: int):
        self.pool = ColumnPool()
        self.n_objects = n_objects
        self._flat: list[int] = []
        self._col_id: list[int] = []

    def add(self, matching: Matching) -> bool:
        if not self.pool.add(matching):
            return False
        t = len(self.pool.columns) - 1
        for i, j in enumerate(matching.assignment):
            if j is not None:
                self._flat.append(i * self.n_objects + j)
                self._col_id.append(t)
        return True

    def cell_sums(self, cell_values: np.ndarray) -> np.ndarray:
        """Per-column sum of ``cell_values`` over the column's cells."""
        size = len(self.pool.columns)
        if not self._flat:
            return np.zeros(size)
        flat = np.asarray(self._flat)
        col_id = np.asarray(self._col_id)
        return np.bincount(col_id, weights=cell_values[flat], minlength=size)


@dataclass
class KTrace:
    k: int
    objective: float
    iterations: int
    columns_added: int
    feasible: bool
    seconds: float


@dataclass
class MdsdResult:
    """Outcome of the maximin search over efficient decompositions."""

    status: str  # optimal | budget-exhausted | not-decomposable
    z: int | None
    decomposition: Decomposition | None
    trace: list[KTrace]
    floor_mu: int
    lower_bound: int
    framework: str
    best_deviation: float | None = None


@dataclass
class Budget:
    time_limit: float | None = None
    max_rounds_per_k: int = 400
    pricing_time_limit: float | None = None

    def deadline(self) -> float | None:
        return None if self.time_limit is None else time.monotonic() + self.time_limit


def _exact_weights(raw: list[tuple[float, Matching]]) -> Decomposition:
    total = sum(Fraction(w) for w, _ in raw)
    terms = tuple((Fraction(w) / total, m) for w, m in raw)
    return Decomposition(terms)


def solve_mdsd_rmp(
    instance: Instance,
    assignment: ProbabilisticAssignment,
    k: int,
    *,
    bank: _Bank,
    budget: Budget,
    deadline: float | None,
    tolerance: float = TOLERANCE,
) -> tuple[bool, float, Decomposition | None, KTrace, bool]:
    """Deviation-master column generation at a fixed cardinality floor.

    Feasible iff the converged deviation is at most the tolerance and the
    super-column carries no weight.  Columns are first pulled from the
    sampled bank by reduced cost; the pricing MIP runs only when the bank
    has nothing negative left.  The final flag reports whether the verdict
    is proven (an interrupted run can only report an unproven infeasible).
    """
    start = time.monotonic()
    n, o = instance.n_agents, instance.n_objects
    eligible = [t for t, c in enumerate(bank.pool.cardinalities) if c >= k]
    active = eligible[:_INITIAL_ACTIVE]
    active_set = set(active)
    iterations = 0
    added = len(active)
    proven = False
    certified = False
    dirty_corner = False
    solution: RmpSolution | None = None

    while iterations < budget.max_rounds_per_k:
        iterations += 1
        columns = [bank.pool.columns[t] for t in active]
        solution = solve_rmp(assignment, columns, k)
        if solution.s <= tolerance:
            if solution.super_weight <= tolerance:
                proven = certified = True
                break
            # Degenerate alternative optimum parked weight on the
            # super-column (possible only when the target has no zero
            # cell); certify by re-solving without it.
            try:
                clean = solve_rmp(assignment, columns, k, include_super=False)
            except MatchlotError:
                clean = None
            if clean is not None and clean.s <= tolerance:
                solution = clean
                proven = certified = True
                break
            dirty_corner = True
        if deadline is not None and time.monotonic() > deadline:
            break
        # Tier one: reactivate bank columns with negative reduced cost.
        uv = np.zeros(n * o)
        for (i, j), val in solution.u.items():
            uv[i * o + j] += val
        for (i, j), val in solution.v.items():
            uv[i * o + j] += val
        sums = bank.cell_sums(uv)
        rc = -sums - solution.w
        candidates = [
            (rc[t], t)
            for t in eligible
            if t not in active_set and rc[t] < -tolerance
        ]
        if candidates:
            candidates.sort()
            for _, t in candidates[:_ACTIVATION_BATCH]:
                active.append(t)
                active_set.add(t)
                added += 1
            continue
        # Tier two: exact pricing over all efficient matchings.
        outcome = price_pe_matching(
            instance,
            assignment,
            solution,
            k,
            tolerance=tolerance,
            time_limit=budget.pricing_time_limit,
        )
        if outcome.matching is None:
            proven = outcome.proven
            break
        if (
            outcome.matching in bank.pool
            and bank.pool.position(outcome.matching) in active_set
        ):
            raise PricingInconsistencyError(
                "pricing returned an active column; dual values are inconsistent"
            )
        bank.add(outcome.matching)
        t = bank.pool.position(outcome.matching)
        eligible.append(t)
        active.append(t)
        active_set.add(t)
        added += 1

    assert solution is not None
    feasible = certified
    decomposition = None
    if feasible:
        raw = [
            (weight, bank.pool.columns[t])
            for t, weight in zip(active, solution.weights)
            if weight > _WEIGHT_FLOOR
        ]
        decomposition = _exact_weights(raw)
    if dirty_corner and not feasible:
        # Could not separate a clean decomposition from the degenerate
        # optimum; never report this as a proven infeasibility.
        proven = False
    trace = KTrace(
        k=k,
        objective=solution.s,
        iterations=iterations,
        columns_added=added,
        feasible=feasible,
        seconds=time.monotonic() - start,
    )
    return feasible, solution.s, decomposition, trace, proven


@dataclass
class AlphaSolution:
    alpha: float
    artificial_mass: float
    weights: list[float]
    u: dict[tuple[int, int], float]
    v: float
    w: float


def solve_alpha_master(
    assignment: ProbabilisticAssignment,
    columns: list[Matching],
    k: int,
) -> AlphaSolution:
    """Coverage master: exact decomposition maximising weight on large matchings.

    Cells are matched exactly; penalised slack pairs keep the master
    feasible while the pool is still too poor to decompose the target, and
    their remaining mass at convergence certifies non-decomposability.
    """
    x = assignment.probs
    n, o = assignment.n_agents, assignment.n_objects
    support = [(i, j) for i in range(n) for j in range(o) if x[i][j] > 0]
    variables = [Variable("alpha", 0.0)]
    objective = {"alpha": 1.0}
    rows: dict[tuple[int, int], dict[str, float]] = {c: {} for c in support}
    for t, col in enumerate(columns):
        name = f"lam_{t}"
        variables.append(Variable(name, 0.0))
        for i, j in enumerate(col.assignment):
            if j is None:
                continue
            if (i, j) not in rows:
                raise ValueError("column assigns outside the target support")
            rows[i, j][name] = 1.0
    for i, j in support:
        plus = f"art_plus_{i}_{j}"
        minus = f"art_minus_{i}_{j}"
        variables.append(Variable(plus, 0.0))
        variables.append(Variable(minus, 0.0))
        objective[plus] = -_ARTIFICIAL_PENALTY
        objective[minus] = -_ARTIFICIAL_PENALTY
        rows[i, j][plus] = 1.0
        rows[i, j][minus] = -1.0

    constraints = [
        Constraint(f"eq_{i}_{j}", coeffs, EQ, float(x[i][j]))
        for (i, j), coeffs in rows.items()
    ]
    kcov = {f"lam_{t}": 1.0 for t, col in enumerate(columns) if col.cardinality() >= k}
    kcov["alpha"] = -1.0
    constraints.append(Constraint("kcov", kcov, GE, 0.0))
    conv: dict[str, float] = {f"lam_{t}": 1.0 for t in range(len(columns))}
    for suffix, sign in (("plus", 1.0), ("minus", -1.0)):
        name = f"art_conv_{suffix}"
        variables.append(Variable(name, 0.0))
        objective[name] = -_ARTIFICIAL_PENALTY
        conv[name] = sign
    constraints.append(Constraint("conv", conv, EQ, 1.0))

    program = LinearProgram(
        sense="max",
        objective=objective,
        variables=tuple(variables),
        constraints=tuple(constraints),
        name="alpha_rmp",
    )
    result = solve_lp(program)
    if result.status != "optimal":
        raise MatchlotError(f"coverage master ended with status {result.status!r}")
    art = sum(
        value
        for name, value in result.primal.items()
        if name.startswith("art_") and value > 0
    )
    return AlphaSolution(
        alpha=result.primal["alpha"],
        artificial_mass=art,
        weights=[result.primal[f"lam_{t}"] for t in range(len(columns))],
        u={(i, j): result.duals[f"eq_{i}_{j}"] for (i, j) in support},
        v=result.duals["kcov"],
        w=result.duals["conv"],
    )


def _price_alpha(
    instance: Instance,
    assignment: ProbabilisticAssignment,
    solution: AlphaSolution,
    k: int,
    *,
    tolerance: float,
    time_limit: float | None,
) -> tuple[list[Matching], bool]:
    """Both coverage pricing problems: without and with the cardinality floor.

    A column joins the pool when its dual expression ``sum m u (+ v) + w``
    is strictly negative.
    """
    exact = assignment.probs
    support = {
        (i, j)
        for i in range(instance.n_agents)
        for j in range(instance.n_objects)
        if exact[i][j] > 0
    }
    forced = {(i, j) for (i, j) in support if exact[i][j] == 1}
    cost = {(i, j): solution.u.get((i, j), 0.0) for (i, j) in support}
    new_columns: list[Matching] = []
    proven = True
    for with_floor in (False, True):
        constant = solution.w + (solution.v if with_floor else 0.0)
        built = build_matching_program(
            instance,
            objective=cost,
            sense="min",
            min_cardinality=k if with_floor and k > 0 else None,
            enforce_pe=True,
            support=support,
            forced=forced,
            name="alpha_pricing",
        )
        result = backend_solve_mip(
            built.program,
            target=-tolerance - constant,
            time_limit=time_limit,
        )
        if result.status == "infeasible":
            continue
        if result.status == "unknown":
            proven = False
            continue
        value = result.objective + constant
        if result.status != "optimal":
            proven = False
        if value < -tolerance:
            matching = built.decode(result)
            if not is_pareto_efficient(instance, matching):
                raise MatchlotError("pricing produced a non-efficient matching")
            new_columns.append(matching)
    return new_columns, proven


def solve_mdsd_alpha(
    instance: Instance,
    assignment: ProbabilisticAssignment,
    k: int,
    *,
    bank: _Bank,
    budget: Budget,
    deadline: float | None,
    tolerance: float = TOLERANCE,
) -> tuple[float, Decomposition | None, KTrace, bool]:
    """Coverage-master column generation at a fixed cardinality floor.

    Returns the converged ``alpha`` (1 means the target decomposes over
    matchings of cardinality at least ``k``), the cleaned decomposition
    when it does, the per-``k`` trace, and whether the verdict is proven.
    """
    start = time.monotonic()
    n, o = instance.n_agents, instance.n_objects
    exact = assignment.probs
    support_mask = np.zeros(n * o, dtype=bool)
    for i in range(n):
        for j in range(o):
            if exact[i][j] > 0:
                support_mask[i * o + j] = True

    def consistent(t: int) -> bool:
        m = bank.pool.columns[t]
        return all(
            j is None or support_mask[i * o + j] for i, j in enumerate(m.assignment)
        )

    eligible = [t for t in range(len(bank.pool.columns)) if consistent(t)]
    active = eligible[:_INITIAL_ACTIVE]
    active_set = set(active)
    iterations = 0
    added = len(active)
    proven = False
    solution: AlphaSolution | None = None

    while iterations < budget.max_rounds_per_k:
        iterations += 1
        columns = [bank.pool.columns[t] for t in active]
        solution = solve_alpha_master(assignment, columns, k)
        if (
            solution.alpha >= 1.0 - tolerance
            and solution.artificial_mass <= tolerance
        ):
            proven = True
            break
        if deadline is not None and time.monotonic() > deadline:
            break
        # Tier one: bank scan under the coverage duals.
        uvec = np.zeros(n * o)
        for (i, j), val in solution.u.items():
            uvec[i * o + j] = val
        sums = bank.cell_sums(uvec)
        candidates = []
        for t in eligible:
            if t in active_set:
                continue
            value = sums[t] + solution.w
            if bank.pool.cardinalities[t] >= k:
                value += solution.v
            if value < -tolerance:
                candidates.append((value, t))
        if candidates:
            candidates.sort()
            for _, t in candidates[:_ACTIVATION_BATCH]:
                active.append(t)
                active_set.add(t)
                added += 1
            continue
        new_columns, price_proven = _price_alpha(
            instance,
            assignment,
            solution,
            k,
            tolerance=tolerance,
            time_limit=budget.pricing_time_limit,
        )
        fresh = 0
        for matching in new_columns:
            bank.add(matching)
            t = bank.pool.position(matching)
            if t in active_set:
                continue
            if t not in eligible:
                eligible.append(t)
            active.append(t)
            active_set.add(t)
            added += 1
            fresh += 1
        if fresh == 0:
            proven = price_proven
            break

    assert solution is not None
    feasible = (
        solution.alpha >= 1.0 - tolerance
        and solution.artificial_mass <= tolerance
    )
    decomposition = None
    if feasible:
        raw = [
            (weight, bank.pool.columns[t])
            for t, weight in zip(active, solution.weights)
            if weight > _WEIGHT_FLOOR
            and bank.pool.cardinalities[t] >= k
        ]
        decomposition = _exact_weights(raw)
    trace = KTrace(
        k=k,
        objective=solution.alpha,
        iterations=iterations,
        columns_added=added,
        feasible=feasible,
        seconds=time.monotonic() - start,
    )
    return solution.alpha, decomposition, trace, proven


def binary_search_z(
    instance: Instance,
    assignment: ProbabilisticAssignment,
    framework: str = "rmp",
    *,
    samples: int = DEFAULT_SAMPLE_SIZE,
    seed: int = 0,
    budget: Budget | None = None,
    tolerance: float = TOLERANCE,
    known_decomposable: bool = False,
    p_minus: int | None = None,
) -> MdsdResult:
    """Maximin cardinality over efficient decompositions, by binary search.

    Tests the ceiling ``floor(mu)`` first; on failure bisects downwards.
    When the caller knows the assignment decomposes over efficient
    matchings (any average of serial-dictatorship outcomes does), the
    search floor is the minimum efficient cardinality ``p_minus``;
    otherwise it is zero and exhausting the range yields the
    not-decomposable verdict.
    """
    if framework not in ("rmp", "alpha"):
        raise ValueError("framework must be 'rmp' or 'alpha'")
    budget = budget or Budget()
    deadline = budget.deadline()
    total = mu(assignment)
    floor_mu = total.numerator // total.denominator

    bank = _Bank(instance.n_objects)
    for matching in sample_sd_matchings(instance, samples, seed):
        bank.add(matching)

    if known_decomposable and p_minus is None:
        from .pe_program import extreme_pe_cardinality

        hint = min(bank.pool.cardinalities) if bank.pool.cardinalities else None
        p_minus = extreme_pe_cardinality(instance, "min", cardinality_hint=hint)
    lower = p_minus if known_decomposable and p_minus is not None else 0

    trace: list[KTrace] = []
    best: tuple[int, Decomposition] | None = None
    best_deviation: float | None = None
    all_proven = True

    def attempt(k: int) -> bool:
        nonlocal best, best_deviation, all_proven
        if framework == "rmp":
            feasible, s_star, decomposition, ktrace, proven = solve_mdsd_rmp(
                instance, assignment, k,
                bank=bank, budget=budget, deadline=deadline, tolerance=tolerance,
            )
            if not feasible:
                best_deviation = s_star if best_deviation is None else min(best_deviation, s_star)
        else:
            alpha, decomposition, ktrace, proven = solve_mdsd_alpha(
                instance, assignment, k,
                bank=bank, budget=budget, deadline=deadline, tolerance=tolerance,
            )
            feasible = decomposition is not None
            if not feasible:
                gap = 1.0 - alpha
                best_deviation = gap if best_deviation is None else min(best_deviation, gap)
        trace.append(ktrace)
        all_proven = all_proven and proven
        if feasible and (best is None or k > best[0]):
            best = (k, decomposition)
        return feasible

    out_of_time = False
    if attempt(floor_mu) and all_proven:
        return MdsdResult(
            status="optimal",
            z=floor_mu,
            decomposition=best[1],
            trace=trace,
            floor_mu=floor_mu,
            lower_bound=lower,
            framework=framework,
        )
    if best is None:
        lo, hi = lower, floor_mu - 1
        while lo <= hi:
            if deadline is not None and time.monotonic() > deadline:
                out_of_time = True
                break
            mid = (lo + hi + 1) // 2
            if attempt(mid):
                lo = mid + 1
            else:
                hi = mid - 1

    conclusive = all_proven and not out_of_time
    if best is not None:
        return MdsdResult(
            status="optimal" if conclusive else "budget-exhausted",
            z=best[0],
            decomposition=best[1],
            trace=trace,
            floor_mu=floor_mu,
            lower_bound=lower,
            framework=framework,
        )
    return MdsdResult(
        status="not-decomposable" if conclusive else "budget-exhausted",
        z=None,
        decomposition=None,
        trace=trace,
        floor_mu=floor_mu,
        lower_bound=lower,
        framework=framework,
        best_deviation=best_deviation,
    )
