import json

import pytest

from helpers import CONST, FLIP, ROWSAME, TRI
from measfun import core, equivalent
from measfun.cli import main, mm_import
from measfun.core import InvariantError, StepFunction, apply_permutations
from measfun.canonical import diagonal_equivalent
from measfun.matrixdist import load_sample, sample_matrix, save_sample


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, f in {
        "flip": FLIP,
        "flipcols": apply_permutations(FLIP, (0, 1), (1, 0)),
        "tri": TRI,
        "const": CONST,
        "rowsame": ROWSAME,
    }.items():
        p = tmp_path / f"{name}.json"
        core.save(f, p)
        out[name] = str(p)
    return out


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_canon_writes_files(files, tmp_path, capsys):
    prefix = str(tmp_path / "canon")
    assert main(["canon", files["flip"], "-o", prefix]) == 0
    first = (tmp_path / "canon.json").read_bytes(), (tmp_path / "canon.sidecar.json").read_bytes()
    assert main(["canon", files["flip"], "-o", prefix]) == 0
    second = (tmp_path / "canon.json").read_bytes(), (tmp_path / "canon.sidecar.json").read_bytes()
    assert first == second
    assert json.loads(first[1])["fiber_group_order"] == 2


def test_canon_const_gives_quotient(files, tmp_path):
    prefix = str(tmp_path / "c")
    assert main(["canon", files["const"], "-o", prefix]) == 0
    assert core.load(tmp_path / "c.json").shape == (1, 1)


def test_canon_corrupt_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"alphabet": ["a"], "row_weights": ["1"]')
    code, _, err = run(["canon", str(p)], capsys)
    assert code == 2
    assert "error" in err and "bad.json" in err


def test_missing_file(capsys):
    code, _, err = run(["canon", "/nonexistent/f.json"], capsys)
    assert code == 2 and "error" in err


def test_equiv_main(files, capsys):
    code, out, _ = run(["equiv", files["flip"], files["flipcols"]], capsys)
    assert code == 0
    assert "equivalent: yes" in out and "sigma:" in out and "tau:" in out
    code, out, _ = run(["equiv", files["flip"], files["tri"]], capsys)
    assert code == 1 and "equivalent: no" in out


def test_equiv_structured(files, capsys):
    code, out, _ = run(["equiv", files["flip"], files["flipcols"], "--format", "structured"], capsys)
    report = json.loads(out)
    f2 = apply_permutations(FLIP, report["sigma"], report["tau"])
    assert code == 0 and f2 == apply_permutations(FLIP, (0, 1), (1, 0))


def test_equiv_skew(files, capsys):
    code, out, _ = run(["equiv", files["flip"], files["rowsame"], "--mode", "skew"], capsys)
    assert code == 0 and "S[1]" in out
    code, _, _ = run(["equiv", files["flip"], files["tri"], "--mode", "skew"], capsys)
    assert code == 1


def test_equiv_alphabet_mismatch(tmp_path, files, capsys):
    other = StepFunction.from_symbols([["a", "c"], ["c", "a"]])
    p = tmp_path / "other.json"
    core.save(other, p)
    code, _, err = run(["equiv", files["flip"], str(p)], capsys)
    assert code == 2 and "alphabet" in err
    code, _, _ = run(["equiv", files["flip"], str(p), "--unify-alphabets"], capsys)
    assert code == 1


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["equiv"])
    assert exc.value.code == 2


def write_points(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_mm_import_explicit(tmp_path, capsys):
    src = write_points(tmp_path, "d.json", {"distances": [[0, 1, 3], [1, 0, 2], [3, 2, 0]]})
    out = str(tmp_path / "f.json")
    assert main(["mm-import", src, "--metric", "explicit", "-o", out]) == 0
    f = core.load(out)
    assert f.alphabet.symbols == ("0", "1", "2", "3")
    assert f.row_space == f.col_space
    assert f.values == f.transpose().values


def test_mm_import_shuffled_is_diagonal_equivalent(tmp_path):
    a = mm_import({"points": [[0], [1], [3]]})
    b = mm_import({"points": [[3], [0], [1]]})
    assert diagonal_equivalent(a, b)
    assert a.alphabet.symbols == ("0", "1", "4", "9")


def test_mm_import_duplicate_points_canon(tmp_path, capsys):
    src = write_points(tmp_path, "p.json", {"points": [[1, 2], [1, 2]]})
    f_path = str(tmp_path / "f.json")
    assert main(["mm-import", src, "-o", f_path]) == 0
    assert core.load(f_path).shape == (2, 2)
    code, out, _ = run(["canon", f_path], capsys)
    assert code == 0 and '"row_weights": ["1"]' in out


def test_mm_import_decimal_and_weights():
    f = mm_import({"points": [[0.5], [1.25]], "weights": ["1/4", "3/4"]})
    assert f.alphabet.numeric == (0, core.parse_rational("9/16"))
    assert f.row_weights == f.col_weights


def test_mm_import_quantization():
    f = mm_import({"points": [[0], [1], [3]]}, q=1, metric="euclidean")
    assert f.alphabet.symbols == ("0", "1", "2", "3")
    g = mm_import({"points": [[0, 0], [1, 1]]}, q=10, metric="euclidean")
    assert g.alphabet.symbols == ("0", "7/5")  # sqrt(2) = 1.414...
    h = mm_import({"points": [[0], [1]]}, q=3, metric="sqeuclidean")
    assert h.alphabet.symbols == ("0", "1")


@pytest.mark.parametrize(
    "obj, match",
    [
        ({"distances": [[0, 1], [1, 0], [2, 2]]}, "square"),
        ({"distances": [[0, 1], [2, 0]]}, "symmetric"),
        ({"points": [[0], [1, 2]]}, "dimension"),
        ({"points": [[0], [1]], "weights": ["1/2"]}, "weights"),
        ({}, "points"),
    ],
)
def test_mm_import_errors(obj, match):
    with pytest.raises(ValueError, match=match):
        mm_import(obj)


def test_mm_import_irrational_needs_q(tmp_path, capsys):
    src = write_points(tmp_path, "p.json", {"points": [[0, 0], [1, 1]]})
    code, _, err = run(["mm-import", src, "--metric", "euclidean"], capsys)
    assert code == 2 and "--q" in err


def test_sjd_level_two(files, capsys):
    code, out, _ = run(["sjd", files["flip"], "--level", "2"], capsys)
    assert code == 0
    assert "(0,1)\t(a,b):1/2 (b,a):1/2" in out
    assert "(0,0)\t(a,a):1/2 (b,b):1/2" in out
    code, out, _ = run(["sjd", files["flip"], "--level", "1", "--format", "structured"], capsys)
    assert json.loads(out)["level"] == 1


def test_sjd_sampled_echoes_seed(files, capsys):
    code, out, _ = run(
        ["sjd", files["tri"], "--level", "3", "--cap-entries", "2", "--sample", "4", "--seed", "5"],
        capsys,
    )
    assert code == 0 and out.startswith("# seed=5\n") and "approximate=true" in out


def test_sample_twice_identical(files, tmp_path):
    a, b = str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
    for out in (a, b):
        assert main(["sample", files["flip"], "--k", "4", "--l", "4", "--seed", "7", "-o", out]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()
    assert "seed 7" in open(a).read()


def test_sample_without_seed_records_one(files, tmp_path):
    out = str(tmp_path / "s.txt")
    assert main(["sample", files["flip"], "--k", "2", "--l", "2", "-o", out]) == 0
    assert load_sample(out).seed is not None


def test_marginal(files, capsys):
    code, out, _ = run(["marginal", files["flip"], "--pattern", "a b/b a"], capsys)
    assert code == 0 and out == "1/8\n"
    code, out, _ = run(["marginal", files["tri"], "--k", "1", "--l", "1"], capsys)
    assert out == "a\t1/4\nb\t3/4\n"
    code, _, _ = run(["marginal", files["tri"]], capsys)
    assert code == 2


def test_reconstruct_then_equiv(files, tmp_path, capsys):
    s = tmp_path / "tri.sample"
    save_sample(sample_matrix(TRI, 4096, 4096, seed=3), s)
    out = str(tmp_path / "rec.json")
    assert main(["reconstruct", str(s), "--max-denominator", "8", "-o", out]) == 0
    assert equivalent(core.load(out), TRI)
    code, _, _ = run(["equiv", out, files["tri"]], capsys)
    assert code == 0


def test_symmetries(files, capsys):
    code, out, _ = run(["symmetries", files["flip"]], capsys)
    assert code == 0
    assert "order: 2" in out and "totally_pure: false" in out
    code, out, _ = run(["symmetries", files["tri"], "--format", "structured"], capsys)
    assert json.loads(out)["order"] == 1


def test_bad_caps_rejected(files, capsys):
    code, _, err = run(["sjd", files["flip"], "--cap-level", "0"], capsys)
    assert code == 2 and "positive" in err


def test_invariant_error_is_value_error():
    assert issubclass(InvariantError, ValueError)
