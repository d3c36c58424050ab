"""Random matrices of a step function and recovery of the function from one.

Sampling draws row atoms and column atoms i.i.d. from their weights and reads
off f(x_i, y_j).  Atom draws use an explicit inverse-CDF on 64-bit words:
with cumulative weights C_0 < C_1 < ... < C_{m-1} = 1, the word u in
[0, 2**64) selects the least i with u < 2**64 * C_i, decided in exact
integer arithmetic.  Row and column words come from two PCG64 substreams
spawned from one ``numpy.random.SeedSequence(seed)``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from measfun.core import (
    Alphabet,
    Distribution,
    FormatError,
    InvariantError,
    StepFunction,
    WeightedSpace,
)
from measfun.purity import is_pure, is_totally_pure, symmetry_group
from measfun.sjd import joint_distribution

DEFAULT_CAP = 10**6
_TWO64 = 1 << 64


class SnappingError(ValueError):
    """Empirical weights cannot be placed on the requested rational grid."""


@dataclass(eq=False)
class SampledMatrix:
    entries: np.ndarray  # k x l symbol indices
    alphabet: Alphabet
    seed: int | None = None
    source: str = "external"
    row_atoms: np.ndarray | None = None
    col_atoms: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.entries = np.asarray(self.entries)
        if self.entries.ndim != 2 or min(self.entries.shape) < 1:
            raise InvariantError("a sampled matrix must be a nonempty k x l array")
        if self.entries.min() < 0 or self.entries.max() >= len(self.alphabet):
            raise InvariantError("sampled entries must index into the alphabet")

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SampledMatrix):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.seed == other.seed
            and self.source == other.source
            and np.array_equal(self.entries, other.entries)
        )

    @classmethod
    def from_symbols(cls, rows: Sequence[Sequence[str]], alphabet: Alphabet, **kw) -> SampledMatrix:
        return cls(np.array([[alphabet.index(s) for s in r] for r in rows]), alphabet, **kw)


@dataclass(frozen=True)
class EmpiricalMeasure:
    axis: str
    depth: int
    support: tuple[tuple[object, Fraction], ...]

    def as_dict(self) -> dict:
        return dict(self.support)

    def __getitem__(self, key) -> Fraction:
        return self.as_dict().get(key, Fraction(0))


def atom_thresholds(weights: Sequence[Fraction]) -> np.ndarray:
    """ceil(2**64 * C_i) for the cumulative weights below 1."""
    out = []
    acc = Fraction(0)
    for w in weights[:-1]:
        acc += w
        t = -((-acc.numerator * _TWO64) // acc.denominator)
        if t >= _TWO64:
            break
        out.append(t)
    return np.array(out, dtype=np.uint64)


def draw_atoms(weights: Sequence[Fraction], count: int, bit_generator: np.random.BitGenerator):
    words = bit_generator.random_raw(count).astype(np.uint64)
    return np.searchsorted(atom_thresholds(weights), words, side="right").astype(np.int64)


def sample_atoms(f: StepFunction, k: int, l: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """The row and column atom draws behind :func:`sample_matrix`.

    Rows and columns use independent substreams, so the first k' < k draws
    coincide with those for k'.
    """
    if k < 1 or l < 1:
        raise ValueError("k and l must be >= 1")
    row_ss, col_ss = np.random.SeedSequence(seed).spawn(2)
    rows = draw_atoms(f.row_weights, k, np.random.PCG64(row_ss))
    cols = draw_atoms(f.col_weights, l, np.random.PCG64(col_ss))
    return rows, cols


def sample_matrix(f: StepFunction, k: int, l: int, seed: int, source: str = "function") -> SampledMatrix:
    """k i.i.d. row atoms and l i.i.d. column atoms; entry (i, j) = f(x_i, y_j)."""
    rows, cols = sample_atoms(f, k, l, seed)
    table = np.array(f.values, dtype=np.int16 if len(f.alphabet) > 255 else np.uint8)
    entries = table[np.ix_(rows, cols)]
    return SampledMatrix(entries, f.alphabet, seed, source, rows, cols)


# ---------------------------------------------------------------------------
# exact marginals of the matrix distribution

def _pattern_indices(f: StepFunction, pattern) -> tuple[tuple[int, ...], ...]:
    rows = []
    for r in pattern:
        rows.append(tuple(f.alphabet.index(s) if isinstance(s, str) else int(s) for s in r))
    if not rows or not rows[0] or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("pattern must be a nonempty rectangular matrix")
    return tuple(rows)


def exact_pattern_marginal(f: StepFunction, pattern, cap: int = DEFAULT_CAP) -> Fraction:
    """P(top-left k x l corner of the random matrix equals ``pattern``).

    Sums over row-atom tuples only: given the rows, the l columns are i.i.d.
    and each matches its pattern column with the joint section probability.
    """
    pat = _pattern_indices(f, pattern)
    k, l = len(pat), len(pat[0])
    m, n = f.shape
    if m**k * n > cap:
        raise ValueError(f"{m}**{k} row assignments exceed the enumeration cap {cap}")
    columns = [tuple(pat[i][j] for i in range(k)) for j in range(l)]
    total = Fraction(0)
    for xs in itertools.product(range(m), repeat=k):
        alpha = joint_distribution(f, "rows", xs)
        p = Fraction(1)
        for c in columns:
            p *= alpha[c]
            if not p:
                break
        if p:
            for x in xs:
                p *= f.row_weights[x]
            total += p
    return total


def pattern_distribution(f: StepFunction, k: int, l: int, cap: int = DEFAULT_CAP) -> dict:
    """Full law of the k x l corner as {pattern (row-major tuples): probability}."""
    return dict(_pattern_law(f, k, l, cap))


@lru_cache(maxsize=4096)
def _pattern_law(f: StepFunction, k: int, l: int, cap: int) -> tuple:
    m, n = f.shape
    if m**k * n**l > cap:
        raise ValueError(f"{m}**{k} * {n}**{l} assignments exceed the enumeration cap {cap}")
    law: dict = {}
    for xs in itertools.product(range(m), repeat=k):
        wx = Fraction(1)
        for x in xs:
            wx *= f.row_weights[x]
        alpha = joint_distribution(f, "rows", xs).masses
        for cols in itertools.product(alpha, repeat=l):
            p = wx
            for _, mass in cols:
                p *= mass
            pat = tuple(tuple(c[0][i] for c in cols) for i in range(k))
            law[pat] = law.get(pat, 0) + p
    return tuple(sorted(law.items()))


def matrixdist_equal_upto(f: StepFunction, g: StepFunction, k: int, l: int, cap: int = DEFAULT_CAP) -> bool:
    """Do f and g give every pattern of size up to k x l the same probability?

    Smaller corners are marginals of the k x l corner, so comparing the full
    k x l law settles every smaller size as well.
    """
    if f.alphabet != g.alphabet:
        raise InvariantError("alphabet mismatch")
    return _pattern_law(f, k, l, cap) == _pattern_law(g, k, l, cap)


# ---------------------------------------------------------------------------
# empirical measures

def _axis_matrix(R: SampledMatrix, axis: str) -> np.ndarray:
    if axis == "rows":
        return R.entries
    if axis == "columns":
        return R.entries.T
    raise ValueError(f"axis must be 'rows' or 'columns', got {axis!r}")


def empirical_row_measure(R: SampledMatrix, axis: str, depth: int) -> EmpiricalMeasure:
    """Frequencies of depth-n prefixes of the rows (or columns) of R.

    For ``axis="columns"`` each column j contributes (r_1j, ..., r_nj); this
    estimates the joint section law of the first n sampled rows.
    """
    M = _axis_matrix(R, axis)
    if not 1 <= depth <= M.shape[1]:
        raise ValueError(f"depth {depth} out of range 1..{M.shape[1]}")
    prefixes, counts = np.unique(M[:, :depth], axis=0, return_counts=True)
    total = M.shape[0]
    support = tuple(
        (tuple(int(v) for v in p), Fraction(int(c), total)) for p, c in zip(prefixes, counts)
    )
    return EmpiricalMeasure(axis, depth, support)


def empirical_measure_on_measures(R: SampledMatrix, axis: str) -> EmpiricalMeasure:
    """Frequencies of the per-row (or per-column) symbol distributions."""
    M = _axis_matrix(R, axis)
    length = M.shape[1]
    counts = np.stack([(M == s).sum(axis=1) for s in range(len(R.alphabet))], axis=1)
    profiles, mult = np.unique(counts, axis=0, return_counts=True)
    support = []
    for prof, c in zip(profiles, mult):
        dist = Distribution.from_mapping(
            {(s,): Fraction(int(v), length) for s, v in enumerate(prof) if v}, 1
        )
        support.append((dist, Fraction(int(c), M.shape[0])))
    support.sort(key=lambda item: item[0].masses)
    return EmpiricalMeasure(axis, 1, tuple(support))


# ---------------------------------------------------------------------------
# reconstruction

def snap_weights(counts: Sequence[int], max_denominator: int) -> list[Fraction]:
    """Largest-remainder apportionment of ``max_denominator`` units.

    Every snapped weight is a multiple of 1/max_denominator, the total is
    exactly 1, and each weight must lie within 1/(2 max_denominator) of its
    empirical frequency and be positive; otherwise :class:`SnappingError`.
    """
    total = sum(counts)
    D = max_denominator
    quotas = [Fraction(c * D, total) for c in counts]
    units = [math.floor(q) for q in quotas]
    short = D - sum(units)
    by_remainder = sorted(range(len(counts)), key=lambda i: (-(quotas[i] - units[i]), i))
    for i in by_remainder[:short]:
        units[i] += 1
    out = []
    for i, u in enumerate(units):
        freq = Fraction(counts[i], total)
        w = Fraction(u, D)
        if u == 0 or abs(w - freq) > Fraction(1, 2 * D):
            raise SnappingError(
                f"class {i} has frequency {float(freq):.6f}; no admissible grid point on 1/{D}"
            )
        out.append(w)
    return out


def _row_classes(M: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classes of identical rows, numbered by first occurrence.

    Returns (class id per row, first row of each class, class sizes).
    """
    M = np.ascontiguousarray(M)
    ids: dict[bytes, int] = {}
    labels = np.empty(M.shape[0], dtype=np.int64)
    first = []
    for i, row in enumerate(M):
        key = row.tobytes()
        c = ids.get(key)
        if c is None:
            c = ids[key] = len(first)
            first.append(i)
        labels[i] = c
    return labels, np.array(first, dtype=np.int64), np.bincount(labels)


def reconstruct(R: SampledMatrix, max_denominator: int) -> StepFunction:
    """Pure step function read off a sampled matrix.

    Identical rows (columns) of R are merged into one atom whose weight is
    the class frequency, snapped to the grid 1/max_denominator.  Atoms are
    listed in order of first occurrence.
    """
    _, row_pick, row_counts = _row_classes(R.entries)
    _, col_pick, col_counts = _row_classes(R.entries.T)
    table = R.entries[np.ix_(row_pick, col_pick)]
    rw = snap_weights([int(c) for c in row_counts], max_denominator)
    cw = snap_weights([int(c) for c in col_counts], max_denominator)
    values = tuple(tuple(int(v) for v in r) for r in table.tolist())
    return StepFunction(WeightedSpace(tuple(rw)), WeightedSpace(tuple(cw)), R.alphabet, values)


# ---------------------------------------------------------------------------
# simple measures

class SimplicityWitnessError(RuntimeError):
    """The sampled witness contradicts the total-purity verdict."""


def simplicity_diagnostic(
    f: StepFunction, *, verify: bool = False, k: int = 512, l: int = 512, seed: int = 0
) -> bool:
    """Is the matrix distribution of ``f`` simple, i.e. is ``f`` totally pure?

    With ``verify`` a matrix is sampled and the verdict is checked against
    it: for totally pure f the sampled atoms are recoverable from R (equal
    rows of R come from one atom); otherwise a nontrivial symmetry or a
    merged pair of atoms yields a different atom sequence with the same R.
    """
    verdict = is_totally_pure(f)
    if not verify:
        return verdict
    R = sample_matrix(f, k, l, seed)
    m, n = f.shape
    if len(set(R.row_atoms.tolist())) < m or len(set(R.col_atoms.tolist())) < n:
        raise ValueError("sample too small: not every atom was drawn; raise k and l")
    table = np.array(f.values)
    if verdict:
        for M, atoms in ((R.entries, R.row_atoms), (R.entries.T, R.col_atoms)):
            labels, _, _ = _row_classes(M)
            pairs = set(zip(labels.tolist(), atoms.tolist()))
            if not len(pairs) == len({c for c, _ in pairs}) == len({a for _, a in pairs}):
                raise SimplicityWitnessError("sampled atoms are not recoverable from R")
        return verdict
    if not is_pure(f):
        witness_found = True  # two atoms with identical sections give identical rows
    else:
        group = symmetry_group(f, weight_preserving=False)
        sigma, tau = group.generators[0]
        alt_rows = np.array(sigma)[R.row_atoms]
        alt_cols = np.array(tau)[R.col_atoms]
        same = np.array_equal(table[np.ix_(alt_rows, alt_cols)], R.entries)
        differs = not (np.array_equal(alt_rows, R.row_atoms) and np.array_equal(alt_cols, R.col_atoms))
        witness_found = same and differs
    if not witness_found:
        raise SimplicityWitnessError("no ambiguity found for a function that is not totally pure")
    return verdict


# ---------------------------------------------------------------------------
# file format

def dumps_sample(R: SampledMatrix) -> str:
    k, l = R.shape
    lines = [
        f"k {k}",
        f"l {l}",
        "alphabet " + " ".join(R.alphabet.symbols),
        f"seed {R.seed if R.seed is not None else 'none'}",
        f"source {R.source}",
    ]
    syms = R.alphabet.symbols
    for row in R.entries.tolist():
        lines.append(" ".join(syms[v] for v in row))
    return "\n".join(lines) + "\n"


def loads_sample(text: str, where: str = "<string>") -> SampledMatrix:
    lines = text.splitlines()
    header = {}
    for lineno, key in enumerate(("k", "l", "alphabet", "seed", "source"), start=1):
        if len(lines) < lineno:
            raise FormatError(f"{where}:{lineno}: missing header line '{key}'")
        name, _, rest = lines[lineno - 1].partition(" ")
        if name != key:
            raise FormatError(f"{where}:{lineno}: expected header '{key}', got {name!r}")
        header[key] = rest
    try:
        k, l = int(header["k"]), int(header["l"])
    except ValueError:
        raise FormatError(f"{where}: k and l must be integers") from None
    alphabet = Alphabet(tuple(header["alphabet"].split()))
    try:
        seed = None if header["seed"] == "none" else int(header["seed"])
    except ValueError:
        raise FormatError(f"{where}:4: seed must be an integer or 'none'") from None
    body = lines[5:]
    if len(body) != k:
        raise FormatError(f"{where}: expected {k} matrix lines, found {len(body)}")
    entries = []
    for i, line in enumerate(body, start=6):
        toks = line.split()
        if len(toks) != l:
            raise FormatError(f"{where}:{i}: expected {l} symbols, found {len(toks)}")
        try:
            entries.append([alphabet.index(t) for t in toks])
        except InvariantError as exc:
            raise FormatError(f"{where}:{i}: {exc}") from None
    return SampledMatrix(np.array(entries, dtype=np.int64), alphabet, seed, header["source"])


def save_sample(R: SampledMatrix, path: str | Path) -> None:
    Path(path).write_text(dumps_sample(R), encoding="utf-8")


def load_sample(path: str | Path) -> SampledMatrix:
    path = Path(path)
    return loads_sample(path.read_text(encoding="utf-8"), str(path))
