"""Exact finite no-free-lunch verification for dimension selection.

The strategy space is the set of all k-element subsets of {1..d}; an
objective function assigns each subset a value from a small finite
alphabet. A deterministic non-revisiting search algorithm is shipped as
data: a decision tree mapping every observed value history to the next
unvisited subset. Enumerating every objective function and simulating an
algorithm on each yields a histogram over observed value sequences; the
no-free-lunch identity says this histogram is the same for every
algorithm, and the check here verifies that exactly, by brute force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Mapping

import numpy as np

from .errors import BudgetExceeded, TooLarge

MAX_POINTS = 64
MAX_FUNCTIONS = 2**24


def enumerate_strategies(d: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All k-subsets of {1..d} in lexicographic order."""
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    if d > 8:
        raise ValueError(f"enumeration is guarded to d <= 8, got d={d}")
    count = math.comb(d, k)
    if count > MAX_POINTS:
        raise TooLarge(f"C({d},{k}) = {count} exceeds the guard of {MAX_POINTS}")
    return tuple(combinations(range(1, d + 1), k))


@dataclass(frozen=True)
class SearchSpace:
    """The finite domain an algorithm searches over.

    points: the strategy enumeration; alphabet: the objective's value set;
    budget: how many queries an algorithm gets.
    """

    points: tuple[tuple[int, ...], ...]
    alphabet: tuple[int, ...]
    budget: int

    def __post_init__(self):
        if len(self.points) == 0:
            raise ValueError("search space needs at least one point")
        if len(set(self.alphabet)) != len(self.alphabet) or len(self.alphabet) < 1:
            raise ValueError(f"alphabet must be distinct and nonempty: {self.alphabet}")
        if not 1 <= self.budget <= len(self.points):
            raise ValueError(
                f"budget must be in 1..{len(self.points)}, got {self.budget}"
            )
        object.__setattr__(self, "alphabet", tuple(int(v) for v in self.alphabet))


@dataclass(frozen=True)
class SearchAlgorithm:
    """A deterministic non-revisiting search rule, stored as data.

    The tree maps each reachable history of observed values (a tuple over
    the alphabet, shorter than the budget) to the index of the next point
    to query. Use validate() against a space before trusting a hand-built
    tree.
    """

    name: str
    tree: Mapping[tuple[int, ...], int]

    def validate(self, space: SearchSpace) -> None:
        """Walk every value path; reject partial or revisiting trees."""
        stack = [((), ())]
        while stack:
            history, visited = stack.pop()
            if len(history) >= space.budget:
                continue
            if history not in self.tree:
                raise ValueError(
                    f"algorithm {self.name!r} is undefined for history {history}"
                )
            point = self.tree[history]
            if not 0 <= point < len(space.points):
                raise ValueError(
                    f"algorithm {self.name!r} points outside the space: {point}"
                )
            if point in visited:
                raise ValueError(
                    f"algorithm {self.name!r} revisits point {point} after {history}"
                )
            for value in space.alphabet:
                stack.append((history + (value,), visited + (point,)))


def _build_tree(space: SearchSpace, choose) -> dict[tuple[int, ...], int]:
    tree: dict[tuple[int, ...], int] = {}

    def rec(history: tuple[int, ...], visited: tuple[int, ...]) -> None:
        if len(history) >= space.budget:
            return
        point = choose(history, visited)
        tree[history] = point
        for value in space.alphabet:
            rec(history + (value,), visited + (point,))

    rec((), ())
    return tree


def lexicographic_algorithm(space: SearchSpace) -> SearchAlgorithm:
    """Visit points in enumeration order, ignoring observed values."""

    def choose(history, visited):
        return next(i for i in range(len(space.points)) if i not in visited)

    return SearchAlgorithm("lexicographic", _build_tree(space, choose))


def reverse_algorithm(space: SearchSpace) -> SearchAlgorithm:
    """Visit points in reverse enumeration order."""

    def choose(history, visited):
        return next(
            i for i in range(len(space.points) - 1, -1, -1) if i not in visited
        )

    return SearchAlgorithm("reverse", _build_tree(space, choose))


def value_greedy_algorithm(space: SearchSpace) -> SearchAlgorithm:
    """Adaptive rule: after seeing the alphabet's top value, jump to the
    highest-index unvisited point; otherwise take the lowest."""
    top = max(space.alphabet)

    def choose(history, visited):
        candidates = [i for i in range(len(space.points)) if i not in visited]
        return candidates[-1] if history and history[-1] == top else candidates[0]

    return SearchAlgorithm("value-greedy", _build_tree(space, choose))


def algorithm_zoo(space: SearchSpace) -> tuple[SearchAlgorithm, ...]:
    """The structurally distinct families exercised by the NFL check."""
    return (
        lexicographic_algorithm(space),
        reverse_algorithm(space),
        value_greedy_algorithm(space),
    )


@dataclass(frozen=True)
class TraceHistogram:
    """Counts of objective functions by the value sequence they produce.

    Only realized sequences are stored; absent sequences have count zero.
    Counts always sum to |alphabet| ** |points|.
    """

    counts: dict[tuple[int, ...], int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def count(self, trace: tuple[int, ...]) -> int:
        return self.counts.get(tuple(trace), 0)


def trace_histogram(space: SearchSpace, alg: SearchAlgorithm) -> TraceHistogram:
    """Simulate the algorithm on every objective function in the space.

    Functions are enumerated as base-v digit strings over the points
    (v = alphabet size); the simulation is vectorized across all of them.
    """
    v = len(space.alphabet)
    n_points = len(space.points)
    n_functions = v**n_points
    if n_functions > MAX_FUNCTIONS:
        raise BudgetExceeded(
            f"{v}^{n_points} = {n_functions} objective functions exceed the "
            f"enumeration guard of {MAX_FUNCTIONS}"
        )
    alg.validate(space)

    f_idx = np.arange(n_functions, dtype=np.int64)
    point_pow = v ** np.arange(n_points, dtype=np.int64)
    hist_code = np.zeros(n_functions, dtype=np.int64)

    for step in range(space.budget):
        lookup = np.empty(v**step, dtype=np.int64)
        for digits in product(range(v), repeat=step):
            history = tuple(space.alphabet[i] for i in digits)
            code = sum(dig * v**s for s, dig in enumerate(digits))
            lookup[code] = alg.tree[history]
        queried = lookup[hist_code]
        observed_digit = (f_idx // point_pow[queried]) % v
        hist_code = hist_code + observed_digit * v**step

    counts_arr = np.bincount(hist_code, minlength=v**space.budget)
    counts: dict[tuple[int, ...], int] = {}
    for code in np.flatnonzero(counts_arr):
        digits = []
        rem = int(code)
        for _ in range(space.budget):
            digits.append(space.alphabet[rem % v])
            rem //= v
        counts[tuple(digits)] = int(counts_arr[code])
    return TraceHistogram(counts)


@dataclass(frozen=True)
class NflVerdict:
    """Whether two algorithms induced identical trace histograms."""

    identical: bool
    max_discrepancy: int
    histogram_1: TraceHistogram
    histogram_2: TraceHistogram


def nfl_verdict(
    space: SearchSpace, alg1: SearchAlgorithm, alg2: SearchAlgorithm
) -> NflVerdict:
    """Exact histogram comparison; discrepancy is the largest per-sequence
    count difference and must be zero for the identity to hold."""
    h1 = trace_histogram(space, alg1)
    h2 = trace_histogram(space, alg2)
    keys = set(h1.counts) | set(h2.counts)
    disc = max((abs(h1.count(k) - h2.count(k)) for k in keys), default=0)
    return NflVerdict(
        identical=disc == 0,
        max_discrepancy=disc,
        histogram_1=h1,
        histogram_2=h2,
    )
