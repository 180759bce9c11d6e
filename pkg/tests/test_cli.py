import hashlib
import json
import os

import pytest

from colcirc import (
    circuit_to_json,
    make_column,
    read_bundle,
    read_col_file,
    write_bundle,
    write_col_file,
)
from colcirc.cli import main
from colcirc.gallery import double_plus_three
from colcirc.types import INT, U8, U32


def sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


@pytest.fixture()
def runs_col(tmp_path):
    path = tmp_path / "data.col"
    write_col_file(path, make_column(U32, [5] * 6 + [9] * 4 + [5] * 3))
    return str(path)


class TestEncodeDecodeVerify:
    def test_rle_bundle_roundtrip(self, tmp_path, runs_col):
        bundle = str(tmp_path / "bundle")
        out = str(tmp_path / "decoded")
        assert main(["encode", "--scheme", "run.rle", runs_col, bundle]) == 0
        assert os.path.exists(os.path.join(bundle, "manifest.json"))
        assert main(["verify", bundle]) == 0
        assert main(["decode", bundle, out]) == 0
        decoded = os.path.join(out, "col.col")
        assert sha(decoded) == sha(runs_col)

    def test_not_encodable_exit_2(self, tmp_path):
        path = tmp_path / "mixed.col"
        write_col_file(path, make_column(U8, [5, 6]))
        assert main(["encode", "--scheme", "constant", str(path), str(tmp_path / "b")]) == 2

    def test_missing_file_exit_1(self, tmp_path):
        assert main(["encode", "--scheme", "constant", str(tmp_path / "nope.col"), str(tmp_path / "b")]) == 1

    def test_corrupt_bundle_exit_3(self, tmp_path, runs_col):
        bundle = str(tmp_path / "bundle")
        main(["encode", "--scheme", "run.rle", runs_col, bundle])
        inst = read_bundle(bundle)
        bad = inst.with_columns(length=make_column(INT, [0] * len(inst.columns["length"])))
        write_bundle(bad, bundle)
        assert main(["verify", bundle]) == 3
        assert main(["decode", bundle, str(tmp_path / "d")]) == 3

    def test_type_mismatched_column_file_exit_3(self, tmp_path, runs_col):
        bundle = str(tmp_path / "bundle")
        main(["encode", "--scheme", "run.rle", runs_col, bundle])
        inst = read_bundle(bundle)
        wrong = make_column(U8, [1] * len(inst.columns["value"]))
        write_bundle(inst.with_columns(value=wrong), bundle)
        assert main(["verify", bundle]) == 3

    def test_empty_column_roundtrip(self, tmp_path):
        src = tmp_path / "empty.col"
        write_col_file(src, make_column(U32, []))
        bundle = str(tmp_path / "b")
        out = str(tmp_path / "d")
        assert main(["encode", "--scheme", "run.rle", str(src), bundle]) == 0
        assert main(["decode", bundle, out]) == 0
        assert sha(os.path.join(out, "col.col")) == sha(str(src))


class TestEval:
    def test_worked_example(self, tmp_path):
        cpath = tmp_path / "circuit.json"
        cpath.write_text(json.dumps(circuit_to_json(double_plus_three())))
        inpath = tmp_path / "in.col"
        write_col_file(inpath, make_column(U32, [1, 5]))
        out = str(tmp_path / "out")
        code = main(["eval", str(cpath), "--input", f"col={inpath}", "-o", out])
        assert code == 0
        assert read_col_file(os.path.join(out, "result.col")).values == (5, 13)

    def test_trace_dumps_ports(self, tmp_path):
        cpath = tmp_path / "circuit.json"
        cpath.write_text(json.dumps(circuit_to_json(double_plus_three())))
        inpath = tmp_path / "in.col"
        write_col_file(inpath, make_column(U32, [2]))
        out = str(tmp_path / "trace")
        assert main(["eval", str(cpath), "--input", f"col={inpath}", "-o", out, "--trace"]) == 0
        files = os.listdir(out)
        assert "mul.result.out.col" in files
        assert read_col_file(os.path.join(out, "mul.result.out.col")).values == (4,)

    def test_invalid_circuit_exit_4(self, tmp_path):
        doc = circuit_to_json(double_plus_three())
        doc["edges"] = doc["edges"][:-1]  # sever a wire: unmapped disengaged input
        cpath = tmp_path / "bad.json"
        cpath.write_text(json.dumps(doc))
        assert main(["eval", str(cpath)]) == 4

    def test_operator_failure_exit_5(self, tmp_path):
        from colcirc.builder import CircuitBuilder

        b = CircuitBuilder()
        b.output("out", b.add("split_first", {"type": "u32"}, col=b.input("col"))["head"])
        cpath = tmp_path / "c.json"
        cpath.write_text(json.dumps(circuit_to_json(b.build())))
        empty = tmp_path / "e.col"
        write_col_file(empty, make_column(U32, []))
        assert main(["eval", str(cpath), "--input", f"col={empty}", "-o", str(tmp_path / "o")]) == 5


class TestStats:
    def test_col_report(self, tmp_path, runs_col, capsys):
        assert main(["stats", runs_col]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["columns"][0]["length"] == 13
        assert doc["columns"][0]["support_size"] == 2

    def test_bundle_ratio(self, tmp_path, capsys):
        src = tmp_path / "c.col"
        write_col_file(src, make_column(U32, [7] * 1000))
        bundle = str(tmp_path / "b")
        main(["encode", "--scheme", "constant", "--params", '{"int_type": "u32"}', str(src), bundle])
        capsys.readouterr()  # drop the encode status line
        assert main(["stats", bundle]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["compression_ratio"] == [500, 1]

    def test_uncompressed_ratio_is_one(self, runs_col, capsys):
        main(["stats", runs_col])
        doc = json.loads(capsys.readouterr().out)
        assert doc["compression_ratio"] == [1, 1]


class TestTransformCli:
    def test_fuse_then_eval_same_outputs(self, tmp_path):
        cpath = tmp_path / "c.json"
        cpath.write_text(json.dumps(circuit_to_json(double_plus_three())))
        fused_path = str(tmp_path / "fused.json")
        code = main(
            [
                "transform",
                str(cpath),
                "--op",
                "fuse",
                "--vertices",
                "mul,add,rep_two,rep_three,len",
                "--name",
                "clitest:fused1",
                "-o",
                fused_path,
            ]
        )
        assert code == 0
        inpath = tmp_path / "in.col"
        write_col_file(inpath, make_column(U32, [4, 11]))
        out1, out2 = str(tmp_path / "o1"), str(tmp_path / "o2")
        assert main(["eval", str(cpath), "--input", f"col={inpath}", "-o", out1]) == 0
        assert main(["eval", fused_path, "--input", f"col={inpath}", "-o", out2]) == 0
        assert sha(os.path.join(out1, "result.col")) == sha(os.path.join(out2, "result.col"))

    def test_dedup_idempotent(self, tmp_path):
        cpath = tmp_path / "c.json"
        cpath.write_text(json.dumps(circuit_to_json(double_plus_three())))
        once, twice = str(tmp_path / "d1.json"), str(tmp_path / "d2.json")
        assert main(["transform", str(cpath), "--op", "dedup", "-o", once]) == 0
        assert main(["transform", once, "--op", "dedup", "-o", twice]) == 0
        assert json.load(open(once)) == json.load(open(twice))

    def test_induce_full_set_isomorphic(self, tmp_path):
        c = double_plus_three()
        cpath = tmp_path / "c.json"
        cpath.write_text(json.dumps(circuit_to_json(c)))
        out = str(tmp_path / "ind.json")
        vertices = ",".join(sorted(c.vertices))
        assert main(["transform", str(cpath), "--op", "induce", "--vertices", vertices, "-o", out]) == 0
        assert json.load(open(out)) == circuit_to_json(c)


class TestGen:
    def test_deterministic(self, tmp_path):
        a, b = str(tmp_path / "a.col"), str(tmp_path / "b.col")
        assert main(["gen", "--kind", "runs", "--seed", "42", "--n", "200", a]) == 0
        assert main(["gen", "--kind", "runs", "--seed", "42", "--n", "200", b]) == 0
        assert sha(a) == sha(b)
        c = str(tmp_path / "c.col")
        main(["gen", "--kind", "runs", "--seed", "43", "--n", "200", c])
        assert sha(a) != sha(c)

    def test_kinds(self, tmp_path):
        for kind in ("runs", "zipf", "noisy-linear"):
            path = str(tmp_path / f"{kind}.col")
            assert main(["gen", "--kind", kind, "--seed", "1", "--n", "50", path]) == 0
            assert len(read_col_file(path)) == 50
        vw = str(tmp_path / "vw")
        assert main(["gen", "--kind", "geometric-widths", "--seed", "1", "--n", "30", vw]) == 0
        inst = read_bundle(vw)
        assert inst.scheme_id == "varwidth.std"
