from itertools import combinations

import pytest

from pcpeel.errors import BudgetExceeded, TooLarge
from pcpeel.nfl import (
    SearchAlgorithm,
    SearchSpace,
    algorithm_zoo,
    enumerate_strategies,
    lexicographic_algorithm,
    nfl_verdict,
    reverse_algorithm,
    trace_histogram,
    value_greedy_algorithm,
)


class TestEnumerateStrategies:
    def test_singletons(self):
        assert enumerate_strategies(3, 1) == ((1,), (2,), (3,))

    def test_pairs(self):
        assert enumerate_strategies(3, 2) == ((1, 2), (1, 3), (2, 3))

    def test_choose_two_of_four(self):
        assert len(enumerate_strategies(4, 2)) == 6

    def test_guards(self):
        with pytest.raises(TooLarge):
            enumerate_strategies(8, 4)  # C(8,4) = 70
        with pytest.raises(ValueError):
            enumerate_strategies(9, 1)


class TestTraceHistogram:
    def test_three_points_binary_single_query(self):
        space = SearchSpace(enumerate_strategies(3, 1), (0, 1), 1)
        hist = trace_histogram(space, lexicographic_algorithm(space))
        # 8 functions total; the first observed value splits them in half
        assert hist.counts == {(0,): 4, (1,): 4}

    def test_full_budget_mass_conservation(self):
        space = SearchSpace(enumerate_strategies(3, 1), (0, 1), 3)
        hist = trace_histogram(space, reverse_algorithm(space))
        assert hist.total == 2**3
        assert all(v == 1 for v in hist.counts.values())

    def test_order_does_not_matter(self):
        space = SearchSpace(enumerate_strategies(3, 1), (0, 1), 2)
        h1 = trace_histogram(space, lexicographic_algorithm(space))
        h2 = trace_histogram(space, reverse_algorithm(space))
        assert h1.counts == h2.counts

    def test_budget_guard(self):
        fake_points = tuple((i,) for i in range(1, 26))
        space = SearchSpace(fake_points, (0, 1), 2)
        with pytest.raises(BudgetExceeded):
            trace_histogram(space, lexicographic_algorithm(space))


class TestValidation:
    def test_revisiting_tree_rejected(self):
        space = SearchSpace(enumerate_strategies(3, 1), (0, 1), 2)
        bad = SearchAlgorithm("revisit", {(): 0, (0,): 0, (1,): 1})
        with pytest.raises(ValueError, match="revisits"):
            bad.validate(space)

    def test_partial_tree_rejected(self):
        space = SearchSpace(enumerate_strategies(3, 1), (0, 1), 2)
        missing = SearchAlgorithm("partial", {(): 0, (0,): 1})
        with pytest.raises(ValueError, match="undefined"):
            missing.validate(space)

    def test_zoo_members_validate(self):
        space = SearchSpace(enumerate_strategies(4, 2), (0, 1, 2), 3)
        for alg in algorithm_zoo(space):
            alg.validate(space)


class TestNflVerdict:
    def test_fixed_vs_reverse(self):
        space = SearchSpace(enumerate_strategies(3, 1), (0, 1), 2)
        v = nfl_verdict(space, lexicographic_algorithm(space), reverse_algorithm(space))
        assert v.identical and v.max_discrepancy == 0

    def test_hand_built_adaptive_tree(self):
        # "query point 2 next iff the first value is 1"
        space = SearchSpace(enumerate_strategies(3, 1), (0, 1), 2)
        adaptive = SearchAlgorithm("if-one-jump", {(): 0, (0,): 2, (1,): 1})
        adaptive.validate(space)
        v = nfl_verdict(space, adaptive, lexicographic_algorithm(space))
        assert v.identical and v.max_discrepancy == 0

    def test_algorithm_against_itself(self):
        space = SearchSpace(enumerate_strategies(4, 2), (0, 1, 2), 2)
        alg = value_greedy_algorithm(space)
        v = nfl_verdict(space, alg, alg)
        assert v.identical

    def test_identity_across_full_grid(self):
        for d in (2, 3, 4):
            for k in (1, 2):
                if k > d:
                    continue
                points = enumerate_strategies(d, k)
                for alphabet in ((0, 1), (0, 1, 2)):
                    for m in (1, 2, 3):
                        if m > len(points):
                            continue
                        space = SearchSpace(points, alphabet, m)
                        zoo = algorithm_zoo(space)
                        for a, b in combinations(zoo, 2):
                            v = nfl_verdict(space, a, b)
                            assert v.max_discrepancy == 0, (d, k, alphabet, m, a.name, b.name)
                            assert v.histogram_1.total == len(alphabet) ** len(points)
