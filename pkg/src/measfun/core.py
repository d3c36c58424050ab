"""Exact finite models of measurable functions of two variables.

A :class:`StepFunction` is a matrix of symbol indices over an ordered
:class:`Alphabet`, with exact rational weights on rows and columns.  All
measure arithmetic uses :class:`fractions.Fraction`; atoms of weight zero are
rejected, which is what "mod 0" amounts to on a finite space.
"""

from __future__ import annotations

import json
import string
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

Rational = Fraction


class InvariantError(ValueError):
    """A value violates a structural invariant (weights, dimensions, symbols)."""


class FormatError(ValueError):
    """A file could not be parsed; the message carries location context."""


def parse_rational(text: str | int) -> Fraction:
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"rational must be a 'p/q' string, got {text!r}")
    s = text.strip()
    try:
        if "/" in s:
            num, den = s.split("/")
            return Fraction(int(num), int(den))
        return Fraction(s)  # also accepts exact decimals such as "0.25"
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of symbols; the order drives every lexicographic tie-break."""

    symbols: tuple[str, ...]
    numeric: tuple[Fraction, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if not self.symbols:
            raise InvariantError("alphabet must be nonempty")
        if len(set(self.symbols)) != len(self.symbols):
            raise InvariantError("alphabet symbols must be distinct")
        for s in self.symbols:
            if not isinstance(s, str) or not s or any(c.isspace() for c in s):
                raise InvariantError(f"invalid symbol {s!r}: must be a nonempty token")
        if self.numeric is not None:
            nums = tuple(Fraction(v) for v in self.numeric)
            if len(nums) != len(self.symbols):
                raise InvariantError("numeric_values must have the same length as alphabet")
            object.__setattr__(self, "numeric", nums)

    @classmethod
    def letters(cls, size: int) -> Alphabet:
        if size <= len(string.ascii_lowercase):
            return cls(tuple(string.ascii_lowercase[:size]))
        return cls(tuple(f"s{i}" for i in range(size)))

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise InvariantError(f"unknown symbol {symbol!r}") from None

    def value(self, index: int) -> Fraction:
        if self.numeric is None:
            raise InvariantError("alphabet has no numeric values")
        return self.numeric[index]


@dataclass(frozen=True)
class WeightedSpace:
    """A finite probability space whose atoms all carry positive weight."""

    weights: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        ws = tuple(Fraction(w) for w in self.weights)
        if not ws:
            raise InvariantError("a weighted space needs at least one atom")
        if any(w <= 0 for w in ws):
            raise InvariantError("weights must be positive (zero-weight atoms are not allowed)")
        if sum(ws) != 1:
            raise InvariantError(f"weights must sum to 1 (got {format_rational(sum(ws))})")
        object.__setattr__(self, "weights", ws)

    @classmethod
    def uniform(cls, size: int) -> WeightedSpace:
        return cls(tuple(Fraction(1, size) for _ in range(size)))

    @property
    def size(self) -> int:
        return len(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, i: int) -> Fraction:
        return self.weights[i]


@dataclass(frozen=True)
class StepFunction:
    """An alphabet-valued function on a product of two finite weighted spaces.

    ``values[i][j]`` is the index into ``alphabet`` of f(x_i, y_j).
    """

    row_space: WeightedSpace
    col_space: WeightedSpace
    alphabet: Alphabet
    values: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        vals = tuple(tuple(int(v) for v in row) for row in self.values)
        if len(vals) != self.row_space.size:
            raise InvariantError(
                f"dimension mismatch: {len(vals)} value rows for {self.row_space.size} row weights"
            )
        n = self.col_space.size
        k = len(self.alphabet)
        for i, row in enumerate(vals):
            if len(row) != n:
                raise InvariantError(
                    f"dimension mismatch: row {i} has {len(row)} entries, expected {n}"
                )
            for v in row:
                if not 0 <= v < k:
                    raise InvariantError(f"unknown symbol index {v} in row {i}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_symbols(
        cls,
        rows: Sequence[Sequence[str]],
        alphabet: Alphabet | Sequence[str] | None = None,
        row_weights: Iterable[Fraction | str | int] | None = None,
        col_weights: Iterable[Fraction | str | int] | None = None,
    ) -> StepFunction:
        """Build from a matrix of symbol strings; weights default to uniform."""
        if alphabet is None:
            seen: dict[str, None] = {}
            for row in rows:
                for s in row:
                    seen.setdefault(s, None)
            alphabet = Alphabet(tuple(sorted(seen)))
        elif not isinstance(alphabet, Alphabet):
            alphabet = Alphabet(tuple(alphabet))
        values = tuple(tuple(alphabet.index(s) for s in row) for row in rows)
        m = len(values)
        n = len(values[0]) if values else 0
        rs = (
            WeightedSpace(tuple(_coerce(w) for w in row_weights))
            if row_weights is not None
            else WeightedSpace.uniform(m)
        )
        cs = (
            WeightedSpace(tuple(_coerce(w) for w in col_weights))
            if col_weights is not None
            else WeightedSpace.uniform(n)
        )
        return cls(rs, cs, alphabet, values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.row_space.size, self.col_space.size

    @property
    def row_weights(self) -> tuple[Fraction, ...]:
        return self.row_space.weights

    @property
    def col_weights(self) -> tuple[Fraction, ...]:
        return self.col_space.weights

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(row[j] for row in self.values)

    def transpose(self) -> StepFunction:
        cols = tuple(self.column(j) for j in range(self.col_space.size))
        return StepFunction(self.col_space, self.row_space, self.alphabet, cols)

    def symbols(self) -> list[list[str]]:
        return [[self.alphabet.symbols[v] for v in row] for row in self.values]

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.int64)

    def with_alphabet(self, alphabet: Alphabet) -> StepFunction:
        """Re-index values into a larger alphabet containing every used symbol."""
        remap = [alphabet.index(s) for s in self.alphabet.symbols]
        vals = tuple(tuple(remap[v] for v in row) for row in self.values)
        return StepFunction(self.row_space, self.col_space, alphabet, vals)


def _coerce(w: Fraction | str | int) -> Fraction:
    if isinstance(w, str):
        return parse_rational(w)
    return Fraction(w)


@dataclass(frozen=True)
class Distribution:
    """An exact probability measure on A^n with finite support.

    Support points are tuples of symbol indices; ``masses`` is kept sorted so
    that equal distributions compare and hash equal.
    """

    arity: int
    masses: tuple[tuple[tuple[int, ...], Fraction], ...] = field(repr=False)

    def __post_init__(self) -> None:
        if self.arity < 1:
            raise InvariantError("distribution arity must be >= 1")
        items = tuple(sorted((tuple(k), Fraction(v)) for k, v in self.masses))
        total = Fraction(0)
        prev = None
        for key, mass in items:
            if len(key) != self.arity:
                raise InvariantError(f"support point {key} has wrong arity")
            if key == prev:
                raise InvariantError(f"duplicate support point {key}")
            if mass <= 0:
                raise InvariantError("distribution masses must be positive")
            total += mass
            prev = key
        if total != 1:
            raise InvariantError(f"distribution masses must sum to 1 (got {total})")
        object.__setattr__(self, "masses", items)

    @classmethod
    def from_mapping(cls, mapping: Mapping[tuple[int, ...], Fraction], arity: int | None = None):
        items = [(k, v) for k, v in mapping.items() if v != 0]
        if arity is None:
            arity = len(items[0][0])
        return cls(arity, tuple(items))

    def __getitem__(self, key: tuple[int, ...]) -> Fraction:
        for k, v in self.masses:
            if k == key:
                return v
        return Fraction(0)

    def as_dict(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self.masses)

    def support(self) -> list[tuple[int, ...]]:
        return [k for k, _ in self.masses]

    def marginal(self, drop: int) -> Distribution:
        """Push forward along the projection forgetting coordinate ``drop``."""
        if self.arity < 2:
            raise InvariantError("cannot marginalize a distribution of arity 1")
        if not 0 <= drop < self.arity:
            raise IndexError(drop)
        acc: dict[tuple[int, ...], Fraction] = {}
        for k, v in self.masses:
            kk = k[:drop] + k[drop + 1 :]
            acc[kk] = acc.get(kk, Fraction(0)) + v
        return Distribution.from_mapping(acc, self.arity - 1)

    def format(self, alphabet: Alphabet) -> str:
        parts = []
        for k, v in self.masses:
            sym = ",".join(alphabet.symbols[i] for i in k)
            parts.append(f"({sym}):{format_rational(v)}")
        return "{" + " ".join(parts) + "}"


def apply_permutations(f: StepFunction, sigma: Sequence[int], tau: Sequence[int]) -> StepFunction:
    """Relabel rows by ``sigma`` and columns by ``tau``.

    Index ``i`` moves to ``sigma[i]``; weights travel with their atoms, so the
    result is always exactly equivalent to ``f``.
    """
    m, n = f.shape
    if len(sigma) != m or len(tau) != n:
        raise InvariantError(f"permutation sizes {len(sigma)}x{len(tau)} do not match {m}x{n}")
    if sorted(sigma) != list(range(m)) or sorted(tau) != list(range(n)):
        raise InvariantError("sigma and tau must be permutations")
    rows: list[tuple[int, ...]] = [()] * m
    rw: list[Fraction] = [Fraction(0)] * m
    cw: list[Fraction] = [Fraction(0)] * n
    for j in range(n):
        cw[tau[j]] = f.col_weights[j]
    for i in range(m):
        new = [0] * n
        src = f.values[i]
        for j in range(n):
            new[tau[j]] = src[j]
        rows[sigma[i]] = tuple(new)
        rw[sigma[i]] = f.row_weights[i]
    return StepFunction(WeightedSpace(tuple(rw)), WeightedSpace(tuple(cw)), f.alphabet, tuple(rows))


def invert(perm: Sequence[int]) -> list[int]:
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    return inv


def compose(first: Sequence[int], then: Sequence[int]) -> list[int]:
    """The permutation ``i -> then[first[i]]``."""
    return [then[p] for p in first]


def _random_composition(rng: np.random.Generator, total: int, parts: int) -> list[int]:
    if parts == 1:
        return [total]
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, total), size=parts - 1, replace=False))
    bounds = [0, *cuts, total]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def random_weights(rng: np.random.Generator, size: int, max_denominator: int) -> WeightedSpace:
    """Positive weights on the grid 1/max_denominator, uniform over compositions."""
    if size > max_denominator:
        raise ValueError(
            f"cannot place {size} positive weights with denominators <= {max_denominator}"
        )
    parts = _random_composition(rng, max_denominator, size)
    return WeightedSpace(tuple(Fraction(p, max_denominator) for p in parts))


def random_function(
    rows: int, cols: int, alphabet_size: int, max_denominator: int, seed: int
) -> StepFunction:
    """A seeded random step function; used as a test-fixture generator."""
    for name, v in (("rows", rows), ("cols", cols), ("alphabet_size", alphabet_size),
                    ("max_denominator", max_denominator)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1")
    rng = np.random.default_rng(seed)
    rs = random_weights(rng, rows, max_denominator)
    cs = random_weights(rng, cols, max_denominator)
    vals = rng.integers(0, alphabet_size, size=(rows, cols))
    return StepFunction(rs, cs, Alphabet.letters(alphabet_size), tuple(map(tuple, vals.tolist())))


def unify_alphabets(f: StepFunction, g: StepFunction) -> tuple[StepFunction, StepFunction]:
    """Re-index two functions over a common alphabet.

    With numeric values on both sides the merged alphabet is sorted by value;
    otherwise it is ``f``'s symbols followed by ``g``'s new ones.
    """
    if f.alphabet == g.alphabet:
        return f, g
    a, b = f.alphabet, g.alphabet
    if a.numeric is not None and b.numeric is not None:
        pairs = dict(zip(a.symbols, a.numeric))
        for s, v in zip(b.symbols, b.numeric):
            if s in pairs and pairs[s] != v:
                raise InvariantError(f"symbol {s!r} has conflicting numeric values")
            pairs[s] = v
        ordered = sorted(pairs.items(), key=lambda kv: (kv[1], kv[0]))
        merged = Alphabet(tuple(s for s, _ in ordered), tuple(v for _, v in ordered))
    else:
        syms = list(a.symbols) + [s for s in b.symbols if s not in a.symbols]
        merged = Alphabet(tuple(syms))
    return f.with_alphabet(merged), g.with_alphabet(merged)


# ---------------------------------------------------------------------------
# serialization

def dumps(f: StepFunction) -> str:
    """Byte-deterministic text encoding, keys in schema order."""
    lines = ["{", f'  "alphabet": {json.dumps(list(f.alphabet.symbols))},']
    if f.alphabet.numeric is not None:
        nums = [format_rational(v) for v in f.alphabet.numeric]
        lines.append(f'  "numeric_values": {json.dumps(nums)},')
    lines.append(f'  "row_weights": {json.dumps([format_rational(w) for w in f.row_weights])},')
    lines.append(f'  "col_weights": {json.dumps([format_rational(w) for w in f.col_weights])},')
    lines.append('  "values": [')
    rows = f.symbols()
    for i, row in enumerate(rows):
        sep = "," if i < len(rows) - 1 else ""
        lines.append(f"    {json.dumps(row)}{sep}")
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _field_rationals(obj: dict, name: str, where: str) -> list[Fraction]:
    raw = obj.get(name)
    if not isinstance(raw, list):
        raise FormatError(f"{where}: field '{name}' must be a list of rationals")
    out = []
    for k, item in enumerate(raw):
        try:
            out.append(parse_rational(item))
        except ValueError as exc:
            raise FormatError(f"{where}: field '{name}'[{k}]: {exc}") from None
    return out


def loads(text: str, where: str = "<string>") -> StepFunction:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{where}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: top level must be an object")
    for key in ("alphabet", "row_weights", "col_weights", "values"):
        if key not in obj:
            raise FormatError(f"{where}: missing field '{key}'")
    unknown = set(obj) - {"alphabet", "numeric_values", "row_weights", "col_weights", "values"}
    if unknown:
        raise FormatError(f"{where}: unknown field(s) {sorted(unknown)}")
    syms = obj["alphabet"]
    if not isinstance(syms, list) or not all(isinstance(s, str) for s in syms):
        raise FormatError(f"{where}: field 'alphabet' must be a list of strings")
    nums = _field_rationals(obj, "numeric_values", where) if "numeric_values" in obj else None
    rw = _field_rationals(obj, "row_weights", where)
    cw = _field_rationals(obj, "col_weights", where)
    values = obj["values"]
    if not isinstance(values, list) or not all(isinstance(r, list) for r in values):
        raise FormatError(f"{where}: field 'values' must be a matrix of symbol strings")
    try:
        alphabet = Alphabet(tuple(syms), tuple(nums) if nums is not None else None)
        try:
            rs = WeightedSpace(tuple(rw))
        except InvariantError as exc:
            raise InvariantError(f"row_weights: {exc}") from None
        try:
            cs = WeightedSpace(tuple(cw))
        except InvariantError as exc:
            raise InvariantError(f"col_weights: {exc}") from None
        idx = []
        for i, row in enumerate(values):
            cur = []
            for j, s in enumerate(row):
                if not isinstance(s, str):
                    raise InvariantError(f"values[{i}][{j}]: expected a symbol string")
                try:
                    cur.append(alphabet.index(s))
                except InvariantError as exc:
                    raise InvariantError(f"values[{i}][{j}]: {exc}") from None
            idx.append(tuple(cur))
        return StepFunction(rs, cs, alphabet, tuple(idx))
    except InvariantError as exc:
        raise InvariantError(f"{where}: {exc}") from None


def load(path: str | Path) -> StepFunction:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), where=str(path))


def save(f: StepFunction, path: str | Path) -> None:
    Path(path).write_text(dumps(f), encoding="utf-8")
