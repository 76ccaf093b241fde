"""Random Serial Dictatorship (exact and sampled) and Probabilistic Serial.

``rsd_exact`` enumerates every agent ordering, which is viable only for
small markets; ``rsd_sampled`` estimates the same matrix from a seeded
sample of orderings.  Both keep exact rational entries (denominator ``n!``
resp. the sample size) so downstream decomposition code never sees floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .core import (
    EnumerationLimitError,
    Instance,
    Matching,
    ProbabilisticAssignment,
)
from .prng import SplitMix64
import itertools

RSD_ENUMERATION_LIMIT = 9
DEFAULT_SAMPLE_SIZE = 10_000


@dataclass(frozen=True)
class RsdEstimate:
    """An RSD assignment matrix plus how it was obtained.

    ``exact`` is True only for full enumeration, in which case
    ``sample_count`` equals the number of orderings ``n!``.
    """

    assignment: ProbabilisticAssignment
    sample_count: int
    seed: int | None
    exact: bool


def _sd_counts(instance: Instance, orderings: Iterator) -> list[list[int]]:
    """Accumulate, per cell, how many orderings assign agent i to object j."""
    n, o = instance.n_agents, instance.n_objects
    counts = [[0] * o for _ in range(n)]
    pref_idx = instance.pref_idx
    caps = instance.capacities
    for sigma in orderings:
        remaining = list(caps)
        for i in sigma:
            for j in pref_idx[i]:
                if remaining[j] > 0:
                    remaining[j] -= 1
                    counts[i][j] += 1
                    break
    return counts


def rsd_exact(instance: Instance, limit: int = RSD_ENUMERATION_LIMIT) -> RsdEstimate:
    """Average serial dictatorship over every ordering of the agents."""
    n = instance.n_agents
    if n > limit:
        raise EnumerationLimitError(
            f"{n} agents would require {n}! orderings; limit is {limit}"
        )
    counts = _sd_counts(instance, itertools.permutations(range(n)))
    total = math.factorial(n)
    probs = tuple(
        tuple(Fraction(c, total) for c in row) for row in counts
    )
    return RsdEstimate(
        assignment=ProbabilisticAssignment(probs),
        sample_count=total,
        seed=None,
        exact=True,
    )


def _sampled_orderings(n: int, samples: int, seed: int) -> Iterator[list[int]]:
    rng = SplitMix64(seed)
    for _ in range(samples):
        yield rng.permutation(n)


def rsd_sampled(
    instance: Instance, samples: int = DEFAULT_SAMPLE_SIZE, seed: int = 0
) -> RsdEstimate:
    """Average serial dictatorship over ``samples`` seeded random orderings."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = instance.n_agents
    counts = _sd_counts(instance, _sampled_orderings(n, samples, seed))
    probs = tuple(
        tuple(Fraction(c, samples) for c in row) for row in counts
    )
    return RsdEstimate(
        assignment=ProbabilisticAssignment(probs),
        sample_count=samples,
        seed=seed,
        exact=False,
    )


def sample_sd_matchings(
    instance: Instance, samples: int, seed: int
) -> list[Matching]:
    """The serial dictatorship outcomes of the seeded ordering sample.

    Uses the same generator stream as :func:`rsd_sampled`, so with equal
    arguments the returned matchings average exactly to the sampled matrix.
    """
    from .core import serial_dictatorship

    n = instance.n_agents
    out = []
    for sigma in _sampled_orderings(n, samples, seed):
        out.append(serial_dictatorship(instance, sigma))
    return out


def probabilistic_serial(instance: Instance) -> ProbabilisticAssignment:
    """Simultaneous eating with unit speeds, in exact rational time.

    Every agent eats probability mass from her best not-yet-exhausted listed
    object; when an object runs out, its eaters move on.  An agent whose
    whole list is exhausted stops eating (she keeps the outside option for
    the remaining time).  The simulation is event-driven: each step jumps to
    the next exhaustion time or to t = 1.
    """
    n, o = instance.n_agents, instance.n_objects
    probs = [[Fraction(0)] * o for _ in range(n)]
    remaining = [Fraction(c) for c in instance.capacities]
    pref_idx = instance.pref_idx
    cursor = [0] * n  # position in each agent's list

    def retarget(i: int) -> int | None:
        prefs = pref_idx[i]
        while cursor[i] < len(prefs) and remaining[prefs[cursor[i]]] == 0:
            cursor[i] += 1
        return prefs[cursor[i]] if cursor[i] < len(prefs) else None

    target: list[int | None] = [retarget(i) for i in range(n)]
    t = Fraction(0)
    while t < 1:
        eaters = [0] * o
        for i in range(n):
            if target[i] is not None:
                eaters[target[i]] += 1
        if not any(eaters):
            break
        step = Fraction(1) - t
        for j in range(o):
            if eaters[j] and remaining[j] > 0:
                step = min(step, remaining[j] / eaters[j])
        for i in range(n):
            j = target[i]
            if j is not None:
                probs[i][j] += step
        for j in range(o):
            if eaters[j]:
                remaining[j] -= step * eaters[j]
        t += step
        for i in range(n):
            j = target[i]
            if j is not None and remaining[j] == 0:
                target[i] = retarget(i)
    return ProbabilisticAssignment(tuple(tuple(row) for row in probs))


def is_envy_free(instance: Instance, assignment: ProbabilisticAssignment) -> bool:
    """First-order stochastic dominance of own row over every other row.

    Agent i is envy-free iff for every other agent i' and every prefix of
    i's preference list, i's cumulative probability over the prefix is at
    least i''s.
    """
    probs = assignment.probs
    n = instance.n_agents
    for i in range(n):
        prefs = instance.pref_idx[i]
        for other in range(n):
            if other == i:
                continue
            own = Fraction(0)
            theirs = Fraction(0)
            for j in prefs:
                own += probs[i][j]
                theirs += probs[other][j]
                if own < theirs:
                    return False
    return True
