import json

import pytest

from proofpipe.errors import DuplicateName, MalformedStatement
from proofpipe.bench.benchmark import KNOWN_UNSOLVABLE, load_benchmark, load_patches


def _write_bench(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))


def test_load_without_patches(tmp_path):
    path = tmp_path / "bench.jsonl"
    _write_bench(
        path,
        [
            {"name": "a", "statement": "theorem a : True := by sorry", "informal_text": "ia", "subset_tags": []},
            {"name": "b", "statement": "theorem b : True := by sorry", "informal_text": "ib", "subset_tags": ["IMO"]},
            {"name": "c", "statement": "theorem c : True := by sorry"},
        ],
    )
    bench = load_benchmark(path)
    assert [s.name for s in bench] == ["a", "b", "c"]
    assert not any(s.corrected for s in bench)
    assert bench[1].subset_tags == frozenset({"IMO"})


def test_patch_marks_corrected(tmp_path):
    path = tmp_path / "bench.jsonl"
    _write_bench(
        path,
        [
            {"name": "mathd_algebra_342", "statement": "broken original", "informal_text": ""},
            {"name": "other", "statement": "fine", "informal_text": ""},
        ],
    )
    patch_path = tmp_path / "patch.jsonl"
    patch_path.write_text(json.dumps({"name": "mathd_algebra_342", "corrected_statement": "fixed version"}) + "\n")
    bench = load_benchmark(path, patch_path)
    by_name = {s.name: s for s in bench}
    assert by_name["mathd_algebra_342"].corrected is True
    assert by_name["mathd_algebra_342"].statement == "fixed version"
    assert by_name["other"].corrected is False


def test_patches_accept_mapping(tmp_path):
    path = tmp_path / "bench.jsonl"
    _write_bench(path, [{"name": "x", "statement": "orig", "informal_text": ""}])
    bench = load_benchmark(path, {"x": "fixed"})
    assert bench[0].statement == "fixed" and bench[0].corrected


def test_duplicate_name_rejected(tmp_path):
    path = tmp_path / "bench.jsonl"
    _write_bench(
        path,
        [
            {"name": "dup", "statement": "s1", "informal_text": ""},
            {"name": "dup", "statement": "s2", "informal_text": ""},
        ],
    )
    with pytest.raises(DuplicateName):
        load_benchmark(path)


def test_malformed_rows_rejected(tmp_path):
    path = tmp_path / "bench.jsonl"
    path.write_text('{"name": "a"}\n')
    with pytest.raises(MalformedStatement):
        load_benchmark(path)
    path.write_text("not json\n")
    with pytest.raises(MalformedStatement):
        load_benchmark(path)


def test_malformed_patch_rejected(tmp_path):
    patch_path = tmp_path / "patch.jsonl"
    patch_path.write_text('{"name": "a"}\n')
    with pytest.raises(MalformedStatement):
        load_patches(patch_path)


def test_known_unsolvable_names():
    assert len(KNOWN_UNSOLVABLE) == 8
    assert "mathd_algebra_342" in KNOWN_UNSOLVABLE
    assert "induction_prod1p1onk3le3m1onn" in KNOWN_UNSOLVABLE
