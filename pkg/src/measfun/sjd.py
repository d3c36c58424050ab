"""Systems of joint distributions of sections.

For a tuple of rows (x_1, ..., x_n) the joint distribution is the law of the
vector (f(x_1, y), ..., f(x_n, y)) with y drawn from the column weights, and
symmetrically for columns.  The family over all tuples is the SJD signature.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import numpy as np

from measfun.core import (
    Distribution,
    InvariantError,
    StepFunction,
    format_rational,
)

Variable = Literal["rows", "cols"]

MAX_LEVEL = 5
MAX_ENTRIES = 10**6


def _check_variable(variable: str) -> None:
    if variable not in ("rows", "cols"):
        raise ValueError(f"variable must be 'rows' or 'cols', got {variable!r}")


def _space_size(f: StepFunction, variable: str) -> int:
    return f.row_space.size if variable == "rows" else f.col_space.size


def joint_distribution(f: StepFunction, variable: Variable, indices: Sequence[int]) -> Distribution:
    """Law of the section vector at the given (possibly repeated) indices."""
    _check_variable(variable)
    idx = tuple(indices)
    if not idx:
        raise ValueError("need at least one index")
    size = _space_size(f, variable)
    for i in idx:
        if not 0 <= i < size:
            raise IndexError(f"{variable} index {i} out of range")
    acc: dict[tuple[int, ...], Fraction] = {}
    vals = f.values
    if variable == "rows":
        for j, w in enumerate(f.col_weights):
            key = tuple(vals[i][j] for i in idx)
            acc[key] = acc.get(key, 0) + w
    else:
        for i, w in enumerate(f.row_weights):
            row = vals[i]
            key = tuple(row[j] for j in idx)
            acc[key] = acc.get(key, 0) + w
    return Distribution.from_mapping(acc, len(idx))


def section_distribution(f: StepFunction, variable: Variable, index: int) -> Distribution:
    return joint_distribution(f, variable, (index,))


@dataclass(frozen=True)
class SjdSignature:
    variable: str
    level: int
    table: tuple[tuple[tuple[int, ...], Distribution], ...]
    approximate: bool = False

    def __getitem__(self, key: tuple[int, ...]) -> Distribution:
        return self.as_dict()[tuple(key)]

    def as_dict(self) -> dict[tuple[int, ...], Distribution]:
        return dict(self.table)

    def __len__(self) -> int:
        return len(self.table)


def sjd_signature(
    f: StepFunction,
    variable: Variable,
    level: int,
    *,
    sample: int | None = None,
    seed: int = 0,
    max_level: int = MAX_LEVEL,
    max_entries: int = MAX_ENTRIES,
) -> SjdSignature:
    """Joint distributions over all ``level``-tuples of indices.

    Full tables are limited to ``level <= max_level`` and ``size**level <=
    max_entries``.  Past the cap, pass ``sample`` to draw that many tuples with
    a seeded generator; the result is then flagged approximate.
    """
    _check_variable(variable)
    if level < 1:
        raise ValueError("level must be >= 1")
    size = _space_size(f, variable)
    if level <= max_level and size**level <= max_entries:
        tuples: Iterable[tuple[int, ...]] = itertools.product(range(size), repeat=level)
        approximate = False
    elif sample is not None:
        rng = np.random.default_rng(seed)
        draws = rng.integers(0, size, size=(sample, level))
        tuples = sorted({tuple(int(v) for v in row) for row in draws})
        approximate = True
    else:
        raise ValueError(
            f"level {level} table has {size}**{level} entries, over the cap; pass sample=..."
        )
    table = tuple((t, joint_distribution(f, variable, t)) for t in tuples)
    return SjdSignature(variable, level, table, approximate)


def check_coherence(sig_n: SjdSignature, sig_prev: SjdSignature) -> bool:
    """Does marginalizing any coordinate of level n give the level n-1 entry?"""
    if sig_n.variable != sig_prev.variable:
        raise ValueError("signatures belong to different variables")
    if sig_n.level != sig_prev.level + 1 or sig_prev.level < 1:
        raise ValueError(f"levels {sig_n.level} and {sig_prev.level} are not consecutive")
    lower = sig_prev.as_dict()
    for t, dist in sig_n.table:
        if dist.arity != sig_n.level:
            return False
        for i in range(sig_n.level):
            key = t[:i] + t[i + 1 :]
            if key not in lower:
                if sig_prev.approximate:
                    continue
                return False
            if dist.marginal(i) != lower[key]:
                return False
    return True


def c_set(
    f: StepFunction, variable: Variable, patterns: Iterable[Sequence[int]]
) -> tuple[frozenset[int], Fraction]:
    """Indices x admitting some pattern of B among their own section values.

    This is the literal existential set: x belongs iff some element of B has
    every coordinate in the value set of the section at x.  Returns the set
    and its measure.
    """
    _check_variable(variable)
    B = [tuple(b) for b in patterns]
    if not B:
        raise ValueError("B must be nonempty")
    arity = len(B[0])
    if any(len(b) != arity for b in B):
        raise ValueError("all patterns in B must have the same arity")
    g = f if variable == "rows" else f.transpose()
    members = []
    for x, row in enumerate(g.values):
        present = set(row)
        if any(all(a in present for a in b) for b in B):
            members.append(x)
    measure = sum((g.row_weights[x] for x in members), Fraction(0))
    return frozenset(members), measure


@lru_cache(maxsize=65536)
def _level_encoding(f: StepFunction, variable: str, level: int) -> tuple:
    size = _space_size(f, variable)
    weights = f.row_weights if variable == "rows" else f.col_weights
    entries = []
    for t in itertools.product(range(size), repeat=level):
        w = Fraction(1)
        for i in t:
            w *= weights[i]
        entries.append((w, joint_distribution(f, variable, t).masses))
    entries.sort()
    return tuple(entries)


def sjd_equal(f: StepFunction, g: StepFunction, variable: Variable, max_level: int) -> bool:
    """Weight-respecting multiset agreement of SJD tables up to ``max_level``.

    Index labels are forgotten: each level is the sorted multiset of
    (product of tuple weights, joint distribution) pairs.
    """
    _check_variable(variable)
    if f.alphabet != g.alphabet:
        raise InvariantError("alphabet mismatch")
    for n in range(1, max_level + 1):
        for h in (f, g):
            if _space_size(h, variable) ** n > MAX_ENTRIES:
                raise ValueError(f"level {n} exceeds the enumeration cap")
        if _level_encoding(f, variable, n) != _level_encoding(g, variable, n):
            return False
    return True


def find_column_transport(f1: StepFunction, f2: StepFunction) -> list[int] | None:
    """A weight-preserving T with f2[i][j] == f1[i][T[j]], or None."""
    if f1.alphabet != f2.alphabet:
        raise InvariantError("alphabet mismatch")
    if f1.shape != f2.shape or f1.row_space != f2.row_space:
        raise InvariantError("functions must share the row space and column count")
    if sorted(f1.col_weights) != sorted(f2.col_weights):
        raise InvariantError("column spaces differ")
    pool: dict[tuple, list[int]] = {}
    for j in range(f1.col_space.size):
        pool.setdefault((f1.col_weights[j], f1.column(j)), []).append(j)
    for v in pool.values():
        v.reverse()
    T = []
    for j in range(f2.col_space.size):
        bucket = pool.get((f2.col_weights[j], f2.column(j)))
        if not bucket:
            return None
        T.append(bucket.pop())
    return T


def _sections(f: StepFunction, variable: str):
    weights = f.row_weights if variable == "rows" else f.col_weights
    return sorted(
        (section_distribution(f, variable, x).masses, weights[x])
        for x in range(_space_size(f, variable))
    )


def skew_equivalent(f1: StepFunction, f2: StepFunction, variable: Variable = "rows") -> bool:
    """Match the pushforwards x -> (law of the section at x, weight of x).

    This classifies the measure-valued map of the distinguished variable; see
    :func:`skew_witness` for an explicit skew product on the atoms.
    """
    _check_variable(variable)
    if f1.alphabet != f2.alphabet:
        raise InvariantError("alphabet mismatch")
    return _sections(f1, variable) == _sections(f2, variable)


def skew_witness(
    f1: StepFunction, f2: StepFunction, variable: Variable = "rows"
) -> tuple[list[int], list[list[int]]] | None:
    """An explicit skew product (T, [S_x]) with f2(T x, S_x y) == f1(x, y).

    For ``variable == "cols"`` the roles of rows and columns are exchanged.
    Returns None when no atom-level skew product exists (which can happen
    even when the section laws match, if column atoms have unequal weights).
    """
    _check_variable(variable)
    if f1.alphabet != f2.alphabet:
        raise InvariantError("alphabet mismatch")
    if variable == "cols":
        f1, f2 = f1.transpose(), f2.transpose()
    if f1.shape != f2.shape or sorted(f1.col_weights) != sorted(f2.col_weights):
        return None

    def profile(f, x):
        return tuple(sorted(zip(f.col_weights, f.values[x])))

    pool: dict[tuple, list[int]] = {}
    for x in reversed(range(f2.row_space.size)):
        pool.setdefault((f2.row_weights[x], profile(f2, x)), []).append(x)
    T = []
    for x in range(f1.row_space.size):
        bucket = pool.get((f1.row_weights[x], profile(f1, x)))
        if not bucket:
            return None
        T.append(bucket.pop())
    S = []
    for x, tx in enumerate(T):
        cols: dict[tuple, list[int]] = {}
        for y in reversed(range(f2.col_space.size)):
            cols.setdefault((f2.col_weights[y], f2.values[tx][y]), []).append(y)
        S.append([cols[(f1.col_weights[y], f1.values[x][y])].pop() for y in range(f1.col_space.size)])
    for x in range(f1.row_space.size):
        for y in range(f1.col_space.size):
            assert f2.values[T[x]][S[x][y]] == f1.values[x][y]
    return T, S


def export_signature(sig: SjdSignature, alphabet) -> str:
    """Tab-separated (tuple, distribution) lines, sorted for stable diffs."""
    lines = [f"# variable={sig.variable} level={sig.level} approximate={str(sig.approximate).lower()}"]
    rows = []
    for t, dist in sig.table:
        idx = ",".join(str(i) for i in t)
        parts = []
        for key, mass in dist.masses:
            parts.append("(" + ",".join(alphabet.symbols[k] for k in key) + "):" + format_rational(mass))
        rows.append(f"({idx})\t" + " ".join(parts))
    lines.extend(sorted(rows))
    return "\n".join(lines) + "\n"
