"""Purity partitions, the pure quotient, and stabilizers of step functions."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from measfun import _search
from measfun.core import StepFunction, WeightedSpace, apply_permutations

Permutation = tuple[int, ...]


@dataclass(frozen=True)
class PurityPartition:
    """Classes of identical rows and of identical columns (0-based indices).

    Classes are listed in order of their first member.
    """

    row_classes: tuple[tuple[int, ...], ...]
    col_classes: tuple[tuple[int, ...], ...]

    @property
    def is_discrete(self) -> bool:
        return all(len(c) == 1 for c in self.row_classes + self.col_classes)


@dataclass(frozen=True)
class SymmetryGroup:
    generators: tuple[tuple[Permutation, Permutation], ...]
    order: int
    weight_preserving: bool
    shape: tuple[int, int]

    def elements(self, limit: int = 100_000) -> set[tuple[Permutation, Permutation]]:
        """Close the generators under composition (small groups only)."""
        m, n = self.shape
        ident = (tuple(range(m)), tuple(range(n)))
        seen = {ident}
        queue = deque([ident])
        while queue:
            s, t = queue.popleft()
            for gs, gt in self.generators:
                nxt = (tuple(gs[i] for i in s), tuple(gt[j] for j in t))
                if nxt not in seen:
                    seen.add(nxt)
                    if len(seen) > limit:
                        raise ValueError("group too large to enumerate")
                    queue.append(nxt)
        return seen


def _classes(keys) -> tuple[tuple[int, ...], ...]:
    groups: dict = {}
    for i, k in enumerate(keys):
        groups.setdefault(k, []).append(i)
    return tuple(tuple(g) for g in groups.values())


def purity_partition(f: StepFunction) -> PurityPartition:
    rows = _classes(f.values)
    cols = _classes(f.column(j) for j in range(f.col_space.size))
    return PurityPartition(rows, cols)


def is_pure(f: StepFunction) -> bool:
    return purity_partition(f).is_discrete


def quotient(f: StepFunction) -> tuple[StepFunction, PurityPartition]:
    """The pure quotient of ``f`` together with the partition it collapses."""
    part = purity_partition(f)
    rw = tuple(sum((f.row_weights[i] for i in c), Fraction(0)) for c in part.row_classes)
    cw = tuple(sum((f.col_weights[j] for j in c), Fraction(0)) for c in part.col_classes)
    reps = [c[0] for c in part.col_classes]
    values = tuple(tuple(f.values[c[0]][j] for j in reps) for c in part.row_classes)
    q = StepFunction(WeightedSpace(rw), WeightedSpace(cw), f.alphabet, values)
    return q, part


def purify(f: StepFunction) -> StepFunction:
    """Merge identical rows and identical columns, summing their weights."""
    return quotient(f)[0]


# ---------------------------------------------------------------------------
# stabilizers

def fixes(f: StepFunction, sigma, tau, weight_preserving: bool = True) -> bool:
    """Does (sigma, tau) fix f?  Weights must be fixed too when ``weight_preserving``."""
    if weight_preserving:
        return apply_permutations(f, sigma, tau) == f
    return _fixes(f, sigma, tau)


def _fixes(f: StepFunction, sigma, tau) -> bool:
    vals = f.values
    for i, row in enumerate(vals):
        target = vals[sigma[i]]
        for j, v in enumerate(row):
            if target[tau[j]] != v:
                return False
    return True


def _weight_perms(weights, weight_preserving: bool):
    idx = range(len(weights))
    for p in itertools.permutations(idx):
        if not weight_preserving or all(weights[p[i]] == weights[i] for i in idx):
            yield p


def brute_force_stabilizer(
    f: StepFunction, weight_preserving: bool, cap: int = 1_000_000
) -> list[tuple[Permutation, Permutation]]:
    """Every admissible pair (sigma, tau) leaving the values of f unchanged."""
    m, n = f.shape
    if math.factorial(m) * math.factorial(n) > cap:
        raise ValueError(f"brute force over {m}!*{n}! pairs exceeds cap {cap}")
    col_perms = list(_weight_perms(f.col_weights, weight_preserving))
    return [
        (s, t)
        for s in _weight_perms(f.row_weights, weight_preserving)
        for t in col_perms
        if _fixes(f, s, t)
    ]


def bipartite_structure(
    f: StepFunction, row_keys=None, col_keys=None, weighted: bool = True
) -> _search.Structure:
    """Encode ``f`` as a two-sided colored structure: rows first, then columns.

    ``row_keys``/``col_keys`` default to the (descending) atom weights when
    ``weighted`` and are otherwise uniform.  Arc multiplicities are opposite
    atom weights when ``weighted`` and 1 otherwise.
    """
    m, n = f.shape
    if row_keys is None:
        row_keys = [(-w,) if weighted else () for w in f.row_weights]
    if col_keys is None:
        col_keys = [(-w,) if weighted else () for w in f.col_weights]
    initial = [(0, k) for k in row_keys] + [(1, k) for k in col_keys]
    one = 1
    vals = f.values
    arcs = []
    for i in range(m):
        arcs.append([(m + j, vals[i][j], f.col_weights[j] if weighted else one) for j in range(n)])
    for j in range(n):
        arcs.append([(i, vals[i][j], f.row_weights[i] if weighted else one) for i in range(m)])

    def certificate(order):
        rows = order[:m]
        cols = [v - m for v in order[m:]]
        return tuple(vals[i][j] for i in rows for j in cols)

    return _search.Structure(initial, arcs, certificate)


def _split_perm(perm, m: int) -> tuple[Permutation, Permutation]:
    return tuple(perm[:m]), tuple(v - m for v in perm[m:])


def symmetry_group(
    f: StepFunction, weight_preserving: bool, method: str = "search"
) -> SymmetryGroup:
    """The stabilizer of ``f`` under independent row and column permutations.

    Without ``weight_preserving`` every bijection is admissible (on a finite
    space with positive weights every bijection is nonsingular).  ``method``
    is ``"search"`` (refinement-pruned backtracking on the pure quotient) or
    ``"brute"`` (exhaustive enumeration, small instances only).
    """
    if method == "brute":
        elems = brute_force_stabilizer(f, weight_preserving)
        m, n = f.shape
        ident = (tuple(range(m)), tuple(range(n)))
        gens = tuple(e for e in elems if e != ident)
        return SymmetryGroup(gens, len(elems), weight_preserving, (m, n))
    if method != "search":
        raise ValueError(f"unknown method {method!r}")

    q, part = quotient(f)

    def members(cls, weights):
        return sorted(cls, key=lambda i: (weights[i], i))

    row_members = [members(c, f.row_weights) for c in part.row_classes]
    col_members = [members(c, f.col_weights) for c in part.col_classes]

    def decoration(mem, weights):
        if weight_preserving:
            return tuple(weights[i] for i in mem)
        return (len(mem),)

    row_keys = [decoration(mem, f.row_weights) for mem in row_members]
    col_keys = [decoration(mem, f.col_weights) for mem in col_members]
    result = _search.search(bipartite_structure(q, row_keys, col_keys, weighted=False))
    qm = q.shape[0]

    m, n = f.shape
    gens: list[tuple[Permutation, Permutation]] = []
    for perm in result.generators:
        qs, qt = _split_perm(perm, qm)
        sigma = [0] * m
        tau = [0] * n
        for c, d in enumerate(qs):
            for a, b in zip(row_members[c], row_members[d]):
                sigma[a] = b
        for c, d in enumerate(qt):
            for a, b in zip(col_members[c], col_members[d]):
                tau[a] = b
        gens.append((tuple(sigma), tuple(tau)))

    inner = 1
    for mems, weights, size, is_row in (
        [(mem, f.row_weights, m, True) for mem in row_members]
        + [(mem, f.col_weights, n, False) for mem in col_members]
    ):
        for a, b in zip(mems, mems[1:]):
            if weight_preserving and weights[a] != weights[b]:
                continue
            swap = list(range(size))
            swap[a], swap[b] = b, a
            ident = tuple(range(n if is_row else m))
            gens.append((tuple(swap), ident) if is_row else (ident, tuple(swap)))
        if weight_preserving:
            for _, grp in itertools.groupby(mems, key=lambda i: weights[i]):
                inner *= math.factorial(len(list(grp)))
        else:
            inner *= math.factorial(len(mems))

    for s, t in gens:
        if not fixes(f, s, t, weight_preserving):
            raise AssertionError("internal error: generator does not fix the function")
    return SymmetryGroup(tuple(gens), inner * result.group_order(), weight_preserving, (m, n))


def is_totally_pure(f: StepFunction) -> bool:
    return symmetry_group(f, weight_preserving=False).order == 1
