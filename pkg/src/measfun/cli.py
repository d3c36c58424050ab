"""Command-line interface.

Exit codes: 0 success (or "equivalent"), 1 negative verdict, 2 usage or
input error.
"""

from __future__ import annotations

import argparse
import json
import math
import secrets
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from measfun import canonical, core, matrixdist, purity, sjd
from measfun.core import Alphabet, FormatError, InvariantError, StepFunction, format_rational


@dataclass
class RunConfig:
    seed: int | None = None
    max_level: int = sjd.MAX_LEVEL
    max_entries: int = sjd.MAX_ENTRIES
    max_assignments: int = matrixdist.DEFAULT_CAP
    max_factorial: int = canonical.DEFAULT_BRUTE_CAP
    max_denominator: int = 8
    fmt: str = "text"
    outputs: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("max_level", "max_entries", "max_assignments", "max_factorial", "max_denominator"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _structured(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _perm_str(p) -> str:
    return " ".join(str(v) for v in p)


# ---------------------------------------------------------------------------
# commands

def cmd_canon(args, cfg: RunConfig) -> int:
    f = core.load(args.input)
    c = canonical.canonical_form(f, purify_first=True)
    text, sidecar = canonical.export_canonical(c)
    if args.output:
        Path(args.output + ".json").write_text(text, encoding="utf-8")
        Path(args.output + ".sidecar.json").write_text(sidecar, encoding="utf-8")
    else:
        sys.stdout.write(text + sidecar)
    return 0


def cmd_equiv(args, cfg: RunConfig) -> int:
    f, g = core.load(args.file1), core.load(args.file2)
    if args.unify_alphabets:
        f, g = core.unify_alphabets(f, g)
    report: dict = {"mode": args.mode}
    if args.mode == "main":
        w = canonical.equivalent(f, g)
        report.update(equivalent=w.verdict)
        if w.verdict:
            report.update(sigma=list(w.sigma), tau=list(w.tau))
    elif args.mode == "diagonal":
        w = canonical.diagonal_equivalent(f, g)
        report.update(equivalent=w.verdict)
        if w.verdict:
            report.update(T=list(w.sigma))
    else:
        verdict = sjd.skew_equivalent(f, g, args.variable)
        report.update(equivalent=verdict, variable=args.variable)
        if verdict:
            wit = sjd.skew_witness(f, g, args.variable)
            if wit is not None:
                report.update(T=wit[0], S=wit[1])
    if cfg.fmt == "structured":
        text = _structured(report)
    else:
        lines = [f"mode: {args.mode}", f"equivalent: {'yes' if report['equivalent'] else 'no'}"]
        if "sigma" in report:
            lines += [f"sigma: {_perm_str(report['sigma'])}", f"tau: {_perm_str(report['tau'])}"]
        if "T" in report:
            lines.append(f"T: {_perm_str(report['T'])}")
        for x, s in enumerate(report.get("S", [])):
            lines.append(f"S[{x}]: {_perm_str(s)}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return 0 if report["equivalent"] else 1


def cmd_sjd(args, cfg: RunConfig) -> int:
    f = core.load(args.input)
    sig = sjd.sjd_signature(
        f,
        args.variable,
        args.level,
        sample=args.sample,
        seed=cfg.seed if cfg.seed is not None else 0,
        max_level=cfg.max_level,
        max_entries=cfg.max_entries,
    )
    if cfg.fmt == "structured":
        obj = {
            "variable": sig.variable,
            "level": sig.level,
            "approximate": sig.approximate,
            "table": [
                {
                    "tuple": list(t),
                    "distribution": [
                        [[f.alphabet.symbols[k] for k in key], format_rational(v)]
                        for key, v in d.masses
                    ],
                }
                for t, d in sig.table
            ],
        }
        if sig.approximate:
            obj["seed"] = cfg.seed if cfg.seed is not None else 0
        text = _structured(obj)
    else:
        text = sjd.export_signature(sig, f.alphabet)
        if sig.approximate:
            text = f"# seed={cfg.seed if cfg.seed is not None else 0}\n" + text
    _emit(text, args.output)
    return 0


def cmd_sample(args, cfg: RunConfig) -> int:
    f = core.load(args.input)
    seed = cfg.seed if cfg.seed is not None else secrets.randbits(63)
    R = matrixdist.sample_matrix(f, args.k, args.l, seed, source=Path(args.input).name)
    _emit(matrixdist.dumps_sample(R), args.output)
    return 0


def _parse_pattern(text: str) -> list[list[str]]:
    rows = [r.split() for r in text.replace(";", "/").split("/")]
    if not rows or any(not r for r in rows):
        raise UsageError(f"bad pattern {text!r}: use rows separated by '/' and symbols by spaces")
    return rows


def cmd_marginal(args, cfg: RunConfig) -> int:
    f = core.load(args.input)
    if args.pattern:
        p = matrixdist.exact_pattern_marginal(f, _parse_pattern(args.pattern), cfg.max_assignments)
        text = _structured({"pattern": args.pattern, "probability": format_rational(p)}) \
            if cfg.fmt == "structured" else format_rational(p) + "\n"
    else:
        if not (args.k and args.l):
            raise UsageError("give --pattern or both --k and --l")
        law = matrixdist.pattern_distribution(f, args.k, args.l, cfg.max_assignments)
        syms = f.alphabet.symbols
        entries = sorted(
            ("/".join(" ".join(syms[v] for v in row) for row in pat), format_rational(p))
            for pat, p in law.items()
        )
        if cfg.fmt == "structured":
            text = _structured({"k": args.k, "l": args.l, "law": [list(e) for e in entries]})
        else:
            text = "".join(f"{pat}\t{p}\n" for pat, p in entries)
    _emit(text, args.output)
    return 0


def cmd_reconstruct(args, cfg: RunConfig) -> int:
    R = matrixdist.load_sample(args.input)
    f = matrixdist.reconstruct(R, cfg.max_denominator)
    _emit(core.dumps(f), args.output)
    return 0


def cmd_symmetries(args, cfg: RunConfig) -> int:
    f = core.load(args.input)
    group = purity.symmetry_group(f, weight_preserving=args.weight_preserving)
    report = {
        "order": group.order,
        "weight_preserving": group.weight_preserving,
        "pure": purity.is_pure(f),
        "totally_pure": purity.is_totally_pure(f),
        "generators": [[list(s), list(t)] for s, t in group.generators],
    }
    if cfg.fmt == "structured":
        text = _structured(report)
    else:
        lines = [
            f"order: {group.order}",
            f"weight_preserving: {str(group.weight_preserving).lower()}",
            f"pure: {str(report['pure']).lower()}",
            f"totally_pure: {str(report['totally_pure']).lower()}",
        ]
        lines += [f"generator: {_perm_str(s)} | {_perm_str(t)}" for s, t in group.generators]
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return 0


# ---------------------------------------------------------------------------
# metric measure spaces

def _nearest_multiple(x: Fraction, q: int) -> Fraction:
    return Fraction(math.floor(x * q + Fraction(1, 2)), q)


def _nearest_sqrt_multiple(x: Fraction, q: int) -> Fraction:
    """Nearest multiple of 1/q to sqrt(x), decided exactly."""
    y = x * q * q
    r = math.isqrt(y.numerator * y.denominator) // y.denominator
    if y >= (Fraction(2 * r + 1, 2)) ** 2:
        r += 1
    return Fraction(r, q)


def _rationals(raw, what: str) -> list[Fraction]:
    try:
        return [core.parse_rational(v) if isinstance(v, str) else Fraction(v) for v in raw]
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{what}: {exc}") from None


def mm_import(obj: dict, q: int | None = None, metric: str = "sqeuclidean") -> StepFunction:
    """Distance table of a finite metric measure space as a symmetric step function.

    ``obj`` holds either ``points`` (coordinate vectors) or ``distances`` (an
    explicit matrix), plus optional ``weights``.  With ``q`` set, distances are
    rounded to the nearest multiple of 1/q; without it they are kept exact,
    which rules out the (generally irrational) Euclidean metric.
    """
    if q is not None and q < 1:
        raise ValueError("quantization denominator must be >= 1")
    if metric == "explicit" and "distances" not in obj:
        raise FormatError("explicit mode needs a 'distances' field")

    def snap(x: Fraction) -> Fraction:
        return x if q is None else _nearest_multiple(x, q)

    if "distances" in obj:
        rows = [_rationals(r, "distances") for r in obj["distances"]]
        size = len(rows)
        if any(len(r) != size for r in rows):
            raise InvariantError("explicit distance matrix must be square")
        if any(rows[i][j] != rows[j][i] for i in range(size) for j in range(size)):
            raise InvariantError("explicit distance matrix must be symmetric")
        table = [[snap(d) for d in r] for r in rows]
    elif "points" in obj:
        pts = [_rationals(p if isinstance(p, list) else [p], "points") for p in obj["points"]]
        size = len(pts)
        if len({len(p) for p in pts}) > 1:
            raise InvariantError("all points need the same dimension")
        sq = [[sum((a - b) ** 2 for a, b in zip(p, r)) for r in pts] for p in pts]
        if metric == "sqeuclidean":
            table = [[snap(d) for d in r] for r in sq]
        elif metric == "euclidean":
            if q is None:
                raise UsageError("euclidean distances are irrational in general; pass --q")
            table = [[_nearest_sqrt_multiple(d, q) for d in r] for r in sq]
        else:
            raise UsageError(f"unknown metric {metric!r}")
    else:
        raise FormatError("points file needs a 'points' or 'distances' field")
    if size < 1:
        raise InvariantError("need at least one point")
    weights = _rationals(obj["weights"], "weights") if "weights" in obj else None
    values = sorted({d for r in table for d in r})
    alphabet = Alphabet(tuple(format_rational(v) for v in values), tuple(values))
    index = {v: i for i, v in enumerate(values)}
    space = core.WeightedSpace(tuple(weights)) if weights else core.WeightedSpace.uniform(size)
    if space.size != size:
        raise InvariantError("weights length does not match the number of points")
    return StepFunction(space, space, alphabet, tuple(tuple(index[d] for d in r) for r in table))


def cmd_mm_import(args, cfg: RunConfig) -> int:
    text = Path(args.input).read_text(encoding="utf-8")
    try:
        obj = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{args.input}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise FormatError(f"{args.input}: top level must be an object")
    f = mm_import(obj, args.q, args.metric)
    _emit(core.dumps(f), args.output)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--max-denominator", type=int, default=8)
    common.add_argument("--cap-level", type=int, default=sjd.MAX_LEVEL)
    common.add_argument("--cap-entries", type=int, default=sjd.MAX_ENTRIES)
    common.add_argument("--cap-assignments", type=int, default=matrixdist.DEFAULT_CAP)
    common.add_argument("--cap-factorial", type=int, default=canonical.DEFAULT_BRUTE_CAP)
    common.add_argument("-o", "--output", default=None)

    parser = argparse.ArgumentParser(prog="measfun", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("canon", parents=[common], help="canonical image (output is a file prefix)")
    p.add_argument("input")
    p.set_defaults(func=cmd_canon)

    p = sub.add_parser("equiv", parents=[common], help="decide equivalence of two functions")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--mode", choices=("main", "diagonal", "skew"), default="main")
    p.add_argument("--variable", choices=("rows", "cols"), default="rows")
    p.add_argument("--unify-alphabets", action="store_true")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("mm-import", parents=[common], help="metric measure space to function file")
    p.add_argument("input")
    p.add_argument("--q", type=int, default=None, help="quantize distances to multiples of 1/q")
    p.add_argument("--metric", choices=("sqeuclidean", "euclidean", "explicit"), default="sqeuclidean")
    p.set_defaults(func=cmd_mm_import)

    p = sub.add_parser("sjd", parents=[common], help="joint-distribution signature table")
    p.add_argument("input")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--variable", choices=("rows", "cols"), default="rows")
    p.add_argument("--sample", type=int, default=None, help="sample this many tuples past the cap")
    p.set_defaults(func=cmd_sjd)

    p = sub.add_parser("sample", parents=[common], help="sample a random matrix")
    p.add_argument("input")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("marginal", parents=[common], help="exact corner probabilities")
    p.add_argument("input")
    p.add_argument("--pattern", default=None, help="e.g. 'a b/b a'")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--l", type=int, default=None)
    p.set_defaults(func=cmd_marginal)

    p = sub.add_parser("reconstruct", parents=[common], help="function from a sampled matrix")
    p.add_argument("input")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("symmetries", parents=[common], help="symmetry group")
    p.add_argument("input")
    p.add_argument("--weight-preserving", action="store_true")
    p.set_defaults(func=cmd_symmetries)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(
            seed=args.seed,
            max_level=args.cap_level,
            max_entries=args.cap_entries,
            max_assignments=args.cap_assignments,
            max_factorial=args.cap_factorial,
            max_denominator=args.max_denominator,
            fmt=args.format,
        )
        return args.func(args, cfg)
    except (FormatError, InvariantError, UsageError, ValueError, OSError) as exc:
        print(f"measfun {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
