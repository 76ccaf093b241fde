import math
from fractions import Fraction

import pytest

from matchlot import (
    EnumerationLimitError,
    Instance,
    ProbabilisticAssignment,
    is_envy_free,
    is_feasible_assignment,
    mu,
    probabilistic_serial,
    rsd_exact,
    rsd_sampled,
)
from matchlot.datagen import family_lb
from matchlot.mechanisms import sample_sd_matchings
from matchlot.prng import SplitMix64

from oracles import random_instance


class TestRsdExact:
    def test_reproduces_example_matrix(self, ex1, x1):
        est = rsd_exact(ex1)
        assert est.exact
        assert est.sample_count == 24
        assert est.assignment.probs == x1.probs

    def test_single_agent(self):
        inst = Instance(("1",), ("a",), (1,), (("a",),))
        est = rsd_exact(inst)
        assert est.assignment.probs == ((Fraction(1),),)

    def test_family_expected_cardinality(self):
        est = rsd_exact(family_lb(2))
        assert mu(est.assignment) == 3  # 2k - 1 at k = 2

    def test_limit(self):
        inst = Instance(
            tuple(str(i) for i in range(10)),
            ("a",),
            (1,),
            tuple(("a",) for _ in range(10)),
        )
        with pytest.raises(EnumerationLimitError):
            rsd_exact(inst)

    def test_denominators_divide_factorial(self):
        rng = SplitMix64(9)
        for _ in range(25):
            inst = random_instance(rng, max_agents=5, max_objects=3)
            est = rsd_exact(inst)
            fact = math.factorial(inst.n_agents)
            assert is_feasible_assignment(inst, est.assignment)
            for row in est.assignment.probs:
                for v in row:
                    assert fact % v.denominator == 0


class TestRsdSampled:
    def test_single_sample_is_indicator(self, ex1):
        est = rsd_sampled(ex1, samples=1, seed=3)
        values = {v for row in est.assignment.probs for v in row}
        assert values <= {Fraction(0), Fraction(1)}
        assert not est.exact

    def test_deterministic_per_seed(self, ex1):
        a = rsd_sampled(ex1, samples=500, seed=11)
        b = rsd_sampled(ex1, samples=500, seed=11)
        c = rsd_sampled(ex1, samples=500, seed=12)
        assert a.assignment.probs == b.assignment.probs
        assert a.assignment.probs != c.assignment.probs

    def test_matches_matching_sample_average(self, ex1):
        est = rsd_sampled(ex1, samples=400, seed=21)
        matchings = sample_sd_matchings(ex1, 400, 21)
        total = [[0] * 3 for _ in range(4)]
        for m in matchings:
            for i, j in enumerate(m.assignment):
                if j is not None:
                    total[i][j] += 1
        expected = tuple(
            tuple(Fraction(c, 400) for c in row) for row in total
        )
        assert est.assignment.probs == expected

    def test_unbiased_across_seeds(self, ex1, x1):
        # Mean entrywise deviation of the 50-seed average from the exact
        # matrix; binomial concentration puts this well under 0.005.
        acc = [[Fraction(0)] * 3 for _ in range(4)]
        seeds = 50
        for seed in range(seeds):
            est = rsd_sampled(ex1, samples=10_000, seed=seed)
            for i in range(4):
                for j in range(3):
                    acc[i][j] += est.assignment.probs[i][j]
        deviations = [
            abs(acc[i][j] / seeds - x1.probs[i][j])
            for i in range(4)
            for j in range(3)
        ]
        assert sum(deviations) / len(deviations) < Fraction(5, 1000)


class TestProbabilisticSerial:
    def test_example_rows(self, ex1):
        ps = probabilistic_serial(ex1)
        h = Fraction(1, 2)
        assert ps.probs == (
            (h, h, 0),
            (h, h, 0),
            (h, 0, 0),
            (h, 0, 0),
        )

    def test_single_agent(self):
        inst = Instance(("1",), ("a",), (1,), (("a",),))
        assert probabilistic_serial(inst).probs == ((Fraction(1),),)

    def test_empty_preferences_never_eat(self):
        inst = Instance(("1", "2"), ("a",), (1,), (("a",), ()))
        ps = probabilistic_serial(inst)
        assert ps.probs[1] == (Fraction(0),)

    def test_eating_time_conservation(self):
        # Row sums equal min(1, time the acceptable set stays nonempty) and
        # each column fills to capacity exactly when it exhausts early.
        rng = SplitMix64(31)
        for _ in range(200):
            inst = random_instance(rng, max_agents=6, max_objects=4)
            ps = probabilistic_serial(inst)
            assert is_feasible_assignment(inst, ps)
            col = ps.col_sums()
            exhausted = [
                col[j] == inst.capacities[j] for j in range(inst.n_objects)
            ]
            for i in range(inst.n_agents):
                row = sum(ps.probs[i], Fraction(0))
                if row < 1:
                    # Stopped early: everything acceptable must have run out.
                    assert all(exhausted[j] for j in inst.pref_idx[i])

    def test_envy_free_on_randoms(self):
        rng = SplitMix64(47)
        for _ in range(1000):
            inst = random_instance(rng, max_agents=6, max_objects=4)
            assert is_envy_free(inst, probabilistic_serial(inst))


class TestEnvyFreeness:
    def test_identical_rows(self, ex1):
        rows = [[Fraction(1, 3)] * 3] * 4
        assert is_envy_free(ex1, ProbabilisticAssignment.from_rows(rows))

    def test_strict_prefix_violation(self):
        inst = Instance(
            ("1", "2"),
            ("a", "b"),
            (1, 1),
            (("a", "b"), ("a", "b")),
        )
        x = ProbabilisticAssignment.from_rows([[0, 1], [1, 0]])
        assert not is_envy_free(inst, x)
