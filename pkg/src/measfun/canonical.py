"""Canonical images and equivalence decisions.

The canonical relabeling of a pure function is the lexicographically least
row-major value matrix over the leaves of an individualization-refinement
tree.  Rows are ordered first by stable color, whose ids sort by descending
weight and then by section distribution, so weights take precedence over
symbols in the comparison.
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from measfun import _search
from measfun.core import (
    Distribution,
    InvariantError,
    StepFunction,
    apply_permutations,
    dumps,
    format_rational,
)
from measfun.purity import bipartite_structure, is_pure, purify, quotient
from measfun.sjd import joint_distribution, section_distribution

Permutation = tuple[int, ...]


@dataclass(frozen=True)
class StableColoring:
    row_colors: tuple[int, ...]
    col_colors: tuple[int, ...]


@dataclass(frozen=True)
class Fiber:
    """Atoms sharing one section distribution, marked 1..m in canonical order."""

    distribution: Distribution
    weights: tuple[Fraction, ...]
    marks: tuple[int, ...]


@dataclass(frozen=True)
class CanonicalImage:
    """Canonical relabeling plus fiber data.

    Equality ignores ``row_perm``/``col_perm``, which depend on the input
    labeling; everything else is an invariant of the equivalence class.
    """

    canonical_matrix: StepFunction
    row_fibers: tuple[Fiber, ...]
    col_fibers: tuple[Fiber, ...]
    row_labels: tuple[tuple[int, int], ...]
    col_labels: tuple[tuple[int, int], ...]
    fiber_group_order: int
    row_perm: Permutation = field(compare=False)
    col_perm: Permutation = field(compare=False)


@dataclass(frozen=True)
class EquivalenceWitness:
    verdict: bool
    sigma: Permutation | None = None
    tau: Permutation | None = None

    def __bool__(self) -> bool:
        return self.verdict


def _initial_keys(f: StepFunction, variable: str):
    weights = f.row_weights if variable == "rows" else f.col_weights
    return [
        (-weights[x], section_distribution(f, variable, x).masses) for x in range(len(weights))
    ]


def _structure(f: StepFunction) -> _search.Structure:
    return bipartite_structure(f, _initial_keys(f, "rows"), _initial_keys(f, "cols"))


def refine(f: StepFunction) -> StableColoring:
    """Stable coloring of rows and columns; ids are ranks of sorted signatures."""
    m = f.shape[0]
    struct = _structure(f)
    colors = _search.refine(struct, _search.rank(struct.initial))
    rows = _search.rank(colors[:m])
    cols = _search.rank(colors[m:])
    return StableColoring(tuple(rows), tuple(cols))


def _fibers(g: StepFunction, variable: str):
    weights = g.row_weights if variable == "rows" else g.col_weights
    groups: dict[Distribution, list[int]] = {}
    for x in range(len(weights)):
        groups.setdefault(section_distribution(g, variable, x), []).append(x)
    fibers = []
    labels = [(0, 0)] * len(weights)
    for k, (dist, members) in enumerate(groups.items()):
        fibers.append(
            Fiber(dist, tuple(weights[x] for x in members), tuple(range(1, len(members) + 1)))
        )
        for mark, x in enumerate(members, start=1):
            labels[x] = (k, mark)
    return tuple(fibers), tuple(labels)


def _run(f: StepFunction) -> tuple[_search.SearchResult, list[int], list[int]]:
    m, n = f.shape
    result = _search.search(_structure(f))
    order = result.best_order
    row_perm = [0] * m
    col_perm = [0] * n
    for p, v in enumerate(order[:m]):
        row_perm[v] = p
    for p, v in enumerate(order[m:]):
        col_perm[v - m] = p
    return result, row_perm, col_perm


def canonical_form(f: StepFunction, purify_first: bool = False) -> CanonicalImage:
    """Canonical image of a pure function.

    Non-pure input is rejected unless ``purify_first`` is set, in which case
    the image of the pure quotient is returned (and the permutations index
    the quotient's atoms).
    """
    if not is_pure(f):
        if not purify_first:
            raise InvariantError("canonical_form needs a pure function (purify it first)")
        f = purify(f)
    result, row_perm, col_perm = _run(f)
    g = apply_permutations(f, row_perm, col_perm)
    row_fibers, row_labels = _fibers(g, "rows")
    col_fibers, col_labels = _fibers(g, "cols")
    return CanonicalImage(
        canonical_matrix=g,
        row_fibers=row_fibers,
        col_fibers=col_fibers,
        row_labels=row_labels,
        col_labels=col_labels,
        fiber_group_order=result.group_order(),
        row_perm=tuple(row_perm),
        col_perm=tuple(col_perm),
    )


def is_tautological(c: CanonicalImage) -> bool:
    """Do the section laws of the canonical matrix equal their fiber measures?"""
    g = c.canonical_matrix
    for variable, fibers, labels, weights in (
        ("rows", c.row_fibers, c.row_labels, g.row_weights),
        ("cols", c.col_fibers, c.col_labels, g.col_weights),
    ):
        if len(labels) != len(weights):
            return False
        seen: dict[int, list[int]] = {}
        for x, (k, mark) in enumerate(labels):
            if not 0 <= k < len(fibers):
                return False
            if section_distribution(g, variable, x) != fibers[k].distribution:
                return False
            seen.setdefault(k, []).append(x)
            if mark != len(seen[k]):
                return False
        for k, fiber in enumerate(fibers):
            members = seen.get(k, [])
            if fiber.marks != tuple(range(1, len(members) + 1)):
                return False
            if fiber.weights != tuple(weights[x] for x in members):
                return False
    return True


# ---------------------------------------------------------------------------
# main equivalence

@dataclass(frozen=True)
class _ClassKey:
    matrix: StepFunction
    row_splits: tuple
    col_splits: tuple
    row_members: tuple = field(compare=False)
    col_members: tuple = field(compare=False)


@lru_cache(maxsize=8192)
def _class_key(f: StepFunction) -> _ClassKey:
    """Canonical key of the pure quotient decorated with how each class splits.

    Merging duplicate atoms changes the underlying finite measure space, so
    the decoration (sorted member weights) keeps the key exact at atom level.
    For pure input it coincides with the plain canonical image.
    """
    q, part = quotient(f)
    row_members = [sorted(c, key=lambda i: (f.row_weights[i], i)) for c in part.row_classes]
    col_members = [sorted(c, key=lambda j: (f.col_weights[j], j)) for c in part.col_classes]
    row_split = [tuple(f.row_weights[i] for i in mem) for mem in row_members]
    col_split = [tuple(f.col_weights[j] for j in mem) for mem in col_members]
    row_keys = [k + (s,) for k, s in zip(_initial_keys(q, "rows"), row_split)]
    col_keys = [k + (s,) for k, s in zip(_initial_keys(q, "cols"), col_split)]
    result = _search.search(bipartite_structure(q, row_keys, col_keys))
    qm = q.shape[0]
    rows = result.best_order[:qm]
    cols = [v - qm for v in result.best_order[qm:]]
    row_perm = [rows.index(c) for c in range(qm)]
    col_perm = [cols.index(c) for c in range(len(cols))]
    g = apply_permutations(q, row_perm, col_perm)
    return _ClassKey(
        g,
        tuple(row_split[c] for c in rows),
        tuple(col_split[c] for c in cols),
        tuple(tuple(row_members[c]) for c in rows),
        tuple(tuple(col_members[c]) for c in cols),
    )


def _match(src_members, dst_members, size: int) -> list[int]:
    perm = [0] * size
    for a_cls, b_cls in zip(src_members, dst_members):
        for a, b in zip(a_cls, b_cls):
            perm[a] = b
    return perm


def equivalent(f: StepFunction, g: StepFunction) -> EquivalenceWitness:
    """Decide f ~ g under weight-preserving row and column bijections.

    Both functions are reduced to their pure quotients and compared by
    canonical key; a positive verdict carries a witness (sigma, tau) with
    ``apply_permutations(f, sigma, tau) == g``, checked before returning.
    """
    if f.alphabet != g.alphabet:
        raise InvariantError("alphabet mismatch")
    if f.shape != g.shape:
        return EquivalenceWitness(False)
    kf, kg = _class_key(f), _class_key(g)
    if kf != kg:
        return EquivalenceWitness(False)
    sigma = _match(kf.row_members, kg.row_members, f.shape[0])
    tau = _match(kf.col_members, kg.col_members, f.shape[1])
    if apply_permutations(f, sigma, tau) != g:
        raise AssertionError("internal error: equivalence witness failed verification")
    return EquivalenceWitness(True, tuple(sigma), tuple(tau))


DEFAULT_BRUTE_CAP = 1_000_000


def _perms_matching(src_weights, dst_weights):
    idx = range(len(src_weights))
    for p in itertools.permutations(idx):
        if all(dst_weights[p[i]] == src_weights[i] for i in idx):
            yield p


def brute_force_equivalent(
    f: StepFunction, g: StepFunction, cap: int = DEFAULT_BRUTE_CAP
) -> EquivalenceWitness:
    """Exhaustive search over all weight-preserving permutation pairs."""
    if f.alphabet != g.alphabet:
        raise InvariantError("alphabet mismatch")
    if f.shape != g.shape:
        return EquivalenceWitness(False)
    m, n = f.shape
    if math.factorial(m) * math.factorial(n) > cap:
        raise ValueError(f"brute force over {m}!*{n}! pairs exceeds cap {cap}")
    fv, gv = f.values, g.values
    col_perms = list(_perms_matching(f.col_weights, g.col_weights))
    for s in _perms_matching(f.row_weights, g.row_weights):
        grows = [gv[s[i]] for i in range(m)]
        for t in col_perms:
            if all(grows[i][t[j]] == fv[i][j] for i in range(m) for j in range(n)):
                return EquivalenceWitness(True, s, t)
    return EquivalenceWitness(False)


# ---------------------------------------------------------------------------
# diagonal equivalence

def _check_square(f: StepFunction) -> None:
    if f.shape[0] != f.shape[1] or f.row_space != f.col_space:
        raise InvariantError("diagonal equivalence needs a square function with equal row/col weights")


def _diagonal_structure(f: StepFunction) -> _search.Structure:
    vals = f.values
    w = f.row_weights
    n = len(w)
    initial = [(-w[i], vals[i][i]) for i in range(n)]
    arcs = [[(j, (vals[i][j], vals[j][i]), w[j]) for j in range(n) if j != i] for i in range(n)]

    def certificate(order):
        return tuple(vals[a][b] for a in order for b in order)

    return _search.Structure(initial, arcs, certificate)


def diagonal_canonical(f: StepFunction) -> tuple[tuple, list[int]]:
    """Canonical key and the order (position -> atom) under one simultaneous relabeling."""
    _check_square(f)
    result = _search.search(_diagonal_structure(f))
    order = result.best_order
    key = (tuple(f.row_weights[v] for v in order), result.best_certificate)
    return key, order


def diagonal_equivalent(f: StepFunction, g: StepFunction) -> EquivalenceWitness:
    """Is there one weight-preserving T with apply_permutations(f, T, T) == g?"""
    if f.alphabet != g.alphabet:
        raise InvariantError("alphabet mismatch")
    _check_square(f)
    _check_square(g)
    if f.shape != g.shape:
        return EquivalenceWitness(False)
    kf, of = diagonal_canonical(f)
    kg, og = diagonal_canonical(g)
    if kf != kg:
        return EquivalenceWitness(False)
    T = [0] * len(of)
    for a, b in zip(of, og):
        T[a] = b
    if apply_permutations(f, T, T) != g:
        raise AssertionError("internal error: diagonal witness failed verification")
    return EquivalenceWitness(True, tuple(T), tuple(T))


def brute_force_diagonal_equivalent(f: StepFunction, g: StepFunction) -> EquivalenceWitness:
    if f.alphabet != g.alphabet:
        raise InvariantError("alphabet mismatch")
    _check_square(f)
    _check_square(g)
    if f.shape != g.shape:
        return EquivalenceWitness(False)
    for t in _perms_matching(f.row_weights, g.row_weights):
        if apply_permutations(f, t, t) == g:
            return EquivalenceWitness(True, t, t)
    return EquivalenceWitness(False)


# ---------------------------------------------------------------------------
# section metric

GroundMetric = Callable[[int, int], Fraction] | Mapping[tuple[int, int], Fraction]


def section_metric(
    f: StepFunction,
    variable: str,
    i: int,
    j: int,
    ground_metric: GroundMetric | None = None,
) -> Fraction:
    """Expected ground distance between two sections under their joint law.

    Without an explicit ground metric the alphabet's numeric values are used
    with r(u, v) = |u - v|.
    """
    if ground_metric is None:
        if f.alphabet.numeric is None:
            raise InvariantError("no ground metric: supply one or give the alphabet numeric values")
        nums = f.alphabet.numeric

        def r(u: int, v: int) -> Fraction:
            return abs(nums[u] - nums[v])
    elif isinstance(ground_metric, Mapping):
        table = ground_metric

        def r(u: int, v: int) -> Fraction:
            return Fraction(table[(u, v)])
    else:
        r = ground_metric
    joint = joint_distribution(f, variable, (i, j))
    return sum((mass * Fraction(r(u, v)) for (u, v), mass in joint.masses), Fraction(0))


# ---------------------------------------------------------------------------
# export

def _dist_json(d: Distribution, alphabet) -> list:
    return [[[alphabet.symbols[k] for k in key], format_rational(v)] for key, v in d.masses]


def _fibers_json(fibers, alphabet) -> list:
    return [
        {
            "distribution": _dist_json(fb.distribution, alphabet),
            "weights": [format_rational(w) for w in fb.weights],
            "marks": list(fb.marks),
        }
        for fb in fibers
    ]


def export_canonical(c: CanonicalImage) -> tuple[str, str]:
    """Function file text and sidecar text, both byte-stable."""
    a = c.canonical_matrix.alphabet
    side = {
        "row_perm": list(c.row_perm),
        "col_perm": list(c.col_perm),
        "fiber_group_order": c.fiber_group_order,
        "row_fibers": _fibers_json(c.row_fibers, a),
        "col_fibers": _fibers_json(c.col_fibers, a),
        "row_labels": [list(x) for x in c.row_labels],
        "col_labels": [list(x) for x in c.col_labels],
    }
    return dumps(c.canonical_matrix), json.dumps(side, indent=2) + "\n"
