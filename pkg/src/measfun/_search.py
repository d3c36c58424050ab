"""Individualization-refinement search over vertex-colored complete digraphs.

Both the bipartite (row/column) problems and the diagonal problem are encoded
as a :class:`Structure`: a vertex set with sortable initial keys and, for each
vertex, a list of ``(neighbor, label, multiplicity)`` arcs.  Color ids are
always assigned by sorting signatures, so two isomorphic structures receive
identical colorings and the search tree is isomorphism invariant.
"""

from __future__ import annotations

from collections.abc import Callable, Hashable, Sequence
from dataclasses import dataclass, field
from typing import Any


@dataclass
class Structure:
    initial: Sequence[Any]
    arcs: Sequence[Sequence[tuple[int, Hashable, Any]]]
    certificate: Callable[[Sequence[int]], tuple]

    @property
    def n(self) -> int:
        return len(self.initial)


def rank(keys: Sequence[Any]) -> list[int]:
    table = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [table[k] for k in keys]


def refine(struct: Structure, colors: Sequence[int]) -> list[int]:
    """Iterate the weighted neighbor-count recoloring to its fixpoint."""
    colors = list(colors)
    count = len(set(colors))
    arcs = struct.arcs
    while True:
        sigs = []
        for u, out in enumerate(arcs):
            acc: dict[tuple[int, Hashable], Any] = {}
            for v, label, mult in out:
                key = (colors[v], label)
                acc[key] = acc.get(key, 0) + mult
            sigs.append((colors[u], tuple(sorted(acc.items()))))
        new = rank(sigs)
        new_count = max(new) + 1
        if new_count == count:
            return new
        colors, count = new, new_count


def individualize(colors: Sequence[int], v: int) -> list[int]:
    return rank([(c, 0 if u == v else 1) for u, c in enumerate(colors)])


def cells(colors: Sequence[int]) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for u, c in enumerate(colors):
        out.setdefault(c, []).append(u)
    return out


def target_cell(colors: Sequence[int]) -> list[int] | None:
    """Largest non-singleton cell, ties broken by smallest color id."""
    best = None
    for c, members in sorted(cells(colors).items()):
        if len(members) > 1 and (best is None or len(members) > len(best)):
            best = members
    return best


@dataclass
class SearchResult:
    root_colors: list[int]
    best_certificate: tuple
    best_order: list[int]
    generators: list[list[int]] = field(default_factory=list)
    leaves: int = 0

    def labeling(self) -> list[int]:
        """Vertex -> canonical position."""
        pos = [0] * len(self.best_order)
        for p, v in enumerate(self.best_order):
            pos[v] = p
        return pos

    def group_order(self) -> int:
        return permutation_group_order(self.generators, len(self.best_order))


class _Searcher:
    def __init__(self, struct: Structure, prune: bool) -> None:
        self.struct = struct
        self.prune = prune
        self.first: tuple[tuple, list[int]] | None = None
        self.best: tuple[tuple, list[int]] | None = None
        self.generators: list[list[int]] = []
        self.leaves = 0

    def run(self) -> SearchResult:
        root = refine(self.struct, rank(self.struct.initial))
        self._visit(root, [])
        assert self.best is not None
        return SearchResult(root, self.best[0], self.best[1], self.generators, self.leaves)

    def _leaf(self, colors: list[int]) -> None:
        self.leaves += 1
        order = sorted(range(len(colors)), key=colors.__getitem__)
        cert = self.struct.certificate(order)
        if self.first is None:
            self.first = self.best = (cert, order)
            return
        assert self.best is not None
        for ref_cert, ref_order in (self.first, self.best):
            if cert == ref_cert:
                perm = [0] * len(order)
                for a, b in zip(ref_order, order):
                    perm[a] = b
                if perm != list(range(len(perm))):
                    if perm not in self.generators:
                        self.generators.append(perm)
                return
        if cert < self.best[0]:
            self.best = (cert, order)

    def _same_orbit(self, v: int, explored: list[int], path: list[int]) -> bool:
        gens = [g for g in self.generators if all(g[p] == p for p in path)]
        if not gens:
            return False
        parent = list(range(len(self.struct.initial)))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for g in gens:
            for a, b in enumerate(g):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
        rv = find(v)
        return any(find(w) == rv for w in explored)

    def _visit(self, colors: list[int], path: list[int]) -> None:
        cell = target_cell(colors)
        if cell is None:
            self._leaf(colors)
            return
        explored: list[int] = []
        for v in cell:
            if self.prune and explored and self._same_orbit(v, explored, path):
                continue
            explored.append(v)
            self._visit(refine(self.struct, individualize(colors, v)), path + [v])


def search(struct: Structure, prune: bool = True) -> SearchResult:
    """Run the full individualization-refinement tree.

    The best leaf minimizes ``struct.certificate``; leaves with a certificate
    equal to the first or current best leaf yield automorphisms.  With
    ``prune`` set, children in one orbit of the automorphisms found so far
    that fix the current path pointwise are explored only once.
    """
    return _Searcher(struct, prune).run()


def permutation_group_order(generators: Sequence[Sequence[int]], degree: int) -> int:
    if not generators:
        return 1
    from sympy.combinatorics import Permutation, PermutationGroup

    group = PermutationGroup([Permutation(list(g), size=degree) for g in generators])
    return int(group.order())
