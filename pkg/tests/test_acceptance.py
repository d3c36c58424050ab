"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` to see the lines
inline; the full run also lists them in the terminal summary.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from helpers import CONST, FLIP, TRI, family
from measfun import core
from measfun.canonical import brute_force_equivalent, canonical_form, equivalent
from measfun.cli import main as cli_main
from measfun.core import apply_permutations, random_function
from measfun.matrixdist import (
    exact_pattern_marginal,
    matrixdist_equal_upto,
    reconstruct,
    sample_atoms,
    sample_matrix,
    save_sample,
)
from measfun.purity import brute_force_stabilizer, is_pure, is_totally_pure, symmetry_group
from measfun.sjd import check_coherence, find_column_transport, sjd_equal, sjd_signature

RESULTS: dict[int, str] = {}
REPORT_DIR = Path(os.environ.get("MEASFUN_REPORT_DIR", Path(__file__).parent / "reports"))


def record(n: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def pairs_upper(items):
    """All unordered pairs including each element with itself."""
    for i in range(len(items)):
        for j in range(i, len(items)):
            yield items[i], items[j]


def test_criterion_01_canonical_invariance():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    failures = 0
    for seed in range(1000):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        k = int(rng.integers(1, 5))
        denom = int(rng.choice([max(m, n), 2 * max(m, n), 12]))
        f = random_function(m, n, k, denom, seed)
        sigma = [int(v) for v in rng.permutation(m)]
        tau = [int(v) for v in rng.permutation(n)]
        g = apply_permutations(f, sigma, tau)
        if canonical_form(f, purify_first=True) != canonical_form(g, purify_first=True):
            failures += 1
    elapsed = time.perf_counter() - t0
    record(1, "canonical invariance", failures == 0 and elapsed < 30,
           f"{failures} failures / 1000, {elapsed:.1f}s (limit 30s)")


def test_criterion_02_oracle_equivalence():
    fam = family()
    t0 = time.perf_counter()
    disagreements = pairs = 0
    for f, g in pairs_upper(fam):
        pairs += 1
        if bool(equivalent(f, g)) != bool(brute_force_equivalent(f, g)):
            disagreements += 1
    elapsed = time.perf_counter() - t0
    record(2, "equivalent vs brute force", disagreements == 0 and elapsed < 120,
           f"{disagreements} disagreements over {pairs} pairs, {elapsed:.1f}s (limit 120s)")


def test_criterion_03_sjd_completeness():
    pure = [f for f in family() if is_pure(f)]
    counterexamples = []
    pairs = 0
    for f, g in pairs_upper(pure):
        pairs += 1
        sjd = sjd_equal(f, g, "rows", 3) and sjd_equal(f, g, "cols", 3)
        truth = bool(brute_force_equivalent(f, g))
        if sjd != truth:
            counterexamples.append({"f": f.symbols(), "g": g.symbols(), "sjd": sjd, "brute": truth})
    if counterexamples:
        REPORT_DIR.mkdir(parents=True, exist_ok=True)
        report = REPORT_DIR / "criterion3_counterexamples.json"
        report.write_text(json.dumps(counterexamples, indent=2) + "\n")
    record(3, "SJD level 3 completeness", not counterexamples,
           f"{len(counterexamples)} counterexamples over {pairs} pairs of {len(pure)} pure functions")


def test_criterion_04_coherence():
    rng = np.random.default_rng(4)
    failures = checks = 0
    for seed in range(200):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        f = random_function(m, n, int(rng.integers(1, 5)), 12, seed)
        for variable, size in (("rows", m), ("cols", n)):
            prev = sjd_signature(f, variable, 1)
            for level in range(2, min(4, size) + 1):
                cur = sjd_signature(f, variable, level)
                checks += 1
                if not check_coherence(cur, prev):
                    failures += 1
                prev = cur
    record(4, "coherence", failures == 0, f"{failures} failures over {checks} level pairs")


def test_criterion_05_transport():
    groups: dict = {}
    for f in family():
        groups.setdefault(sjd_signature(f, "rows", 3).table, []).append(f)
    failures = pairs = 0
    for group in groups.values():
        for f1, f2 in itertools.product(group, repeat=2):
            pairs += 1
            T = find_column_transport(f1, f2)
            ok = T is not None and all(
                f2.values[i][j] == f1.values[i][T[j]] for i in range(3) for j in range(3)
            )
            failures += not ok
    record(5, "column transport", failures == 0,
           f"{failures} failures over {pairs} ordered pairs with equal row tables")


def test_criterion_06_matrix_distribution():
    fam = family()
    t0 = time.perf_counter()
    disagreements = pairs = 0
    for f, g in pairs_upper(fam):
        pairs += 1
        if matrixdist_equal_upto(f, g, 3, 3) != bool(brute_force_equivalent(f, g)):
            disagreements += 1
    elapsed = time.perf_counter() - t0
    record(6, "matrix distribution k=l=3", disagreements == 0 and elapsed < 600,
           f"{disagreements} disagreements over {pairs} pairs, {elapsed:.1f}s (limit 600s)")


def test_criterion_07_reconstruction():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    successes = trials = 0
    seed = 0
    while trials < 100:
        m, n = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        f = random_function(m, n, int(rng.integers(2, 5)), 8, seed)
        seed += 1
        if not is_totally_pure(f):
            continue
        R = sample_matrix(f, 4096, 4096, seed=trials)
        try:
            successes += bool(equivalent(reconstruct(R, 8), f))
        except ValueError:
            pass
        trials += 1
    elapsed = time.perf_counter() - t0
    record(7, "reconstruction", successes >= 99 and elapsed < 60,
           f"{successes}/100 equivalent, {elapsed:.1f}s (limit 60s)")


def test_criterion_08_exchangeability_and_sampler():
    rng = np.random.default_rng(8)
    exch_fail = 0
    for seed in range(50):
        f = random_function(int(rng.integers(1, 4)), int(rng.integers(1, 4)), 2, 6, seed)
        k, l = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        pattern = rng.integers(0, 2, size=(k, l))
        permuted = pattern[np.ix_(rng.permutation(k), rng.permutation(l))]
        if exact_pattern_marginal(f, pattern.tolist()) != exact_pattern_marginal(f, permuted.tolist()):
            exch_fail += 1

    # Diagonal entries R[i, i] of a k x k sample are i.i.d. draws of a single
    # entry, so binomial bounds apply to them exactly.
    N = 10_000
    inside = 0
    for seed in range(100):
        f = random_function(int(rng.integers(1, 6)), int(rng.integers(1, 6)),
                            int(rng.integers(1, 4)), 10, seed)
        rows, cols = sample_atoms(f, N, N, seed=seed)
        entries = np.array(f.values)[rows, cols]
        ok = True
        for s, sym in enumerate(f.alphabet.symbols):
            p = float(exact_pattern_marginal(f, [[sym]]))
            freq = float((entries == s).mean())
            ok &= abs(freq - p) <= 4 * math.sqrt(p * (1 - p) / N)
        inside += ok
    record(8, "exchangeability and sampler", exch_fail == 0 and inside >= 95,
           f"{exch_fail}/50 exchangeability failures, {inside}/100 sampler tests within 4 sigma")


def test_criterion_09_purity_gap():
    exact = (
        is_pure(FLIP)
        and not is_totally_pure(FLIP)
        and symmetry_group(FLIP, weight_preserving=False).order == 2
        and is_totally_pure(TRI)
        and not is_pure(CONST)
    )
    mismatches = 0
    for f in family():
        stab = brute_force_stabilizer(f, weight_preserving=False)
        one_sided = any(
            (s == (0, 1, 2)) != (t == (0, 1, 2)) for s, t in stab
        )
        if is_pure(f) != (not one_sided) or is_totally_pure(f) != (len(stab) == 1):
            mismatches += 1
    record(9, "purity gap", exact and mismatches == 0,
           f"examples {'ok' if exact else 'WRONG'}, {mismatches} mismatches over 512 functions")


def test_criterion_10_cli_determinism(tmp_path, capsys):
    src = tmp_path / "in"
    src.mkdir()
    core.save(FLIP, src / "flip.json")
    core.save(TRI, src / "tri.json")
    core.save(apply_permutations(FLIP, (0, 1), (1, 0)), src / "flip2.json")
    (src / "points.json").write_text(json.dumps({"points": [[0, 1], [2, 0.5], [1, 1]]}))
    save_sample(sample_matrix(TRI, 300, 300, seed=1), src / "tri.sample")
    p = lambda name: str(src / name)  # noqa: E731
    commands = {
        "canon": ["canon", p("flip.json"), "-o", "{out}"],
        "equiv-main": ["equiv", p("flip.json"), p("flip2.json"), "-o", "{out}"],
        "equiv-diagonal": ["equiv", p("flip.json"), p("flip2.json"), "--mode", "diagonal",
                           "--format", "structured", "-o", "{out}"],
        "equiv-skew": ["equiv", p("flip.json"), p("tri.json"), "--mode", "skew", "-o", "{out}"],
        "mm-import": ["mm-import", p("points.json"), "-o", "{out}"],
        "sjd": ["sjd", p("tri.json"), "--level", "3", "-o", "{out}"],
        "sjd-sampled": ["sjd", p("tri.json"), "--level", "4", "--cap-entries", "3",
                        "--sample", "5", "--seed", "3", "-o", "{out}"],
        "sample": ["sample", p("tri.json"), "--k", "40", "--l", "30", "--seed", "9", "-o", "{out}"],
        "marginal": ["marginal", p("tri.json"), "--k", "2", "--l", "2", "-o", "{out}"],
        "reconstruct": ["reconstruct", p("tri.sample"), "-o", "{out}"],
        "symmetries": ["symmetries", p("flip.json"), "--format", "structured", "-o", "{out}"],
    }
    differing = []
    for name, argv in commands.items():
        outputs = []
        for run in range(2):
            out = tmp_path / f"{name}.{run}"
            cli_main([a.replace("{out}", str(out)) for a in argv])
            files = sorted(tmp_path.glob(f"{name}.{run}*"))
            outputs.append([f.read_bytes() for f in files])
        if not outputs[0] or outputs[0] != outputs[1]:
            differing.append(name)
    capsys.readouterr()
    record(10, "CLI determinism", not differing,
           f"{len(commands) - len(differing)}/{len(commands)} commands byte-identical"
           + (f"; differing: {', '.join(differing)}" if differing else ""))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
