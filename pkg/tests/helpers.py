"""Shared fixtures: the small named functions and the exhaustive 3x3 family."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache

from measfun.core import Alphabet, StepFunction, apply_permutations

AB = Alphabet(("a", "b"))

FLIP = StepFunction.from_symbols([["a", "b"], ["b", "a"]], AB)
FLIP_ROWSWAP = StepFunction.from_symbols([["b", "a"], ["a", "b"]], AB)
TRI = StepFunction.from_symbols([["a", "b"], ["b", "b"]], AB)
CONST = StepFunction.from_symbols([["a", "a"], ["a", "a"]], AB)
DUP = StepFunction.from_symbols(
    [["a", "b"], ["a", "b"], ["b", "a"]], AB, row_weights=["1/4", "1/4", "1/2"]
)
ROWSAME = StepFunction.from_symbols([["a", "b"], ["a", "b"]], AB)


@lru_cache(maxsize=None)
def family() -> tuple[StepFunction, ...]:
    """All 512 functions on 3x3 uniform spaces over {a, b}."""
    out = []
    for bits in itertools.product((0, 1), repeat=9):
        rows = tuple(tuple(bits[3 * i : 3 * i + 3]) for i in range(3))
        out.append(StepFunction.from_symbols([[AB.symbols[v] for v in r] for r in rows], AB))
    return tuple(out)


@lru_cache(maxsize=None)
def family_orbits() -> tuple[int, ...]:
    """Orbit id of every family member, by enumerating all 3!*3! relabelings."""
    fam = family()
    index = {f.values: i for i, f in enumerate(fam)}
    orbit = [-1] * len(fam)
    perms = list(itertools.permutations(range(3)))
    next_id = 0
    for i, f in enumerate(fam):
        if orbit[i] >= 0:
            continue
        for s in perms:
            for t in perms:
                orbit[index[apply_permutations(f, s, t).values]] = next_id
        next_id += 1
    return tuple(orbit)


def all_perm_pairs(m: int, n: int):
    return itertools.product(itertools.permutations(range(m)), itertools.permutations(range(n)))


def columns_match_after_row_perm(f: StepFunction, g: StepFunction) -> bool:
    """Uniform-weight equivalence oracle that only enumerates row permutations."""
    m, _ = f.shape
    target = sorted(g.column(j) for j in range(g.shape[1]))
    for s in itertools.permutations(range(m)):
        cols = sorted(tuple(f.values[s[i]][j] for i in range(m)) for j in range(f.shape[1]))
        if cols == target:
            return True
    return False


def uniform(n: int) -> list[Fraction]:
    return [Fraction(1, n)] * n


def factorial_product(m: int, n: int) -> int:
    return math.factorial(m) * math.factorial(n)
