import json

import pandas as pd
import pytest

from rainbow_cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def _json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture
def cyclic5(tmp_path):
    path = str(tmp_path / "z5.json")
    assert main(["gen", "--kind", "cyclic", "--n", "5", "--out", path]) == 0
    return path


def test_gen_solve_verify(capsys, tmp_path, cyclic5):
    report = str(tmp_path / "report.json")
    code, _ = _run(capsys, "solve", "--in", cyclic5, "--report", report, "--seed", "3", "--restarts", "4")
    assert code == 0
    data = _json(report)
    assert data["document"] == "report" and data["kind"] == "latin"
    assert data["size"] == 5

    verdict = str(tmp_path / "verdict.json")
    code, _ = _run(capsys, "verify", "--instance", cyclic5, "--matching", report, "--out", verdict)
    assert code == 0
    assert _json(verdict)["ok"] is True


def test_verify_rejects_a_repeated_symbol(capsys, tmp_path, cyclic5):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "matching", "transversal": [[0, 1, 1], [1, 0, 1]]}))
    code, captured = _run(capsys, "verify", "--instance", cyclic5, "--matching", str(bad))
    assert code == 1
    verdict = json.loads(captured.out)
    assert verdict["violations"][0]["kind"] == "duplicate-color"


def test_invalid_latin_square_exits_one(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kind": "latin", "cells": [[0, 0], [1, 0]]}))
    code, captured = _run(capsys, "solve", "--in", str(path))
    assert code == 1
    error = json.loads(captured.out)
    assert error["error"] == "invalid-latin-array"
    assert error["details"]["cells"] == [[0, 0], [0, 1]]


def test_bad_residue_exits_two(capsys):
    code, captured = _run(capsys, "gen", "--kind", "bose", "--n", "8")
    assert code == 2
    assert json.loads(captured.err[captured.err.index("{\n"):])["error"] == "bad-residue"


def test_oracle_cap_exits_three(capsys, tmp_path):
    path = str(tmp_path / "z10.json")
    main(["gen", "--kind", "cyclic", "--n", "10", "--out", path])
    code, _ = _run(capsys, "oracle", "--in", path)
    assert code == 3


def test_oracle(capsys, tmp_path, cyclic5):
    out = str(tmp_path / "oracle.json")
    assert _run(capsys, "oracle", "--in", cyclic5, "--out", out)[0] == 0
    assert _json(out)["maximum"] == 5


def test_missing_required_flag():
    with pytest.raises(SystemExit) as info:
        main(["solve"])
    assert info.value.code == 2


def test_unknown_config_key(capsys, tmp_path, cyclic5):
    cfg = tmp_path / "solver.cfg"
    cfg.write_text("speed=11\n")
    code, _ = _run(capsys, "solve", "--in", cyclic5, "--cfg", str(cfg))
    assert code == 2


def test_steiner_round_trip(capsys, tmp_path):
    sts = str(tmp_path / "sts.json")
    report = str(tmp_path / "report.json")
    assert main(["gen", "--kind", "skolem", "--n", "13", "--out", sts]) == 0
    assert _run(capsys, "solve", "--in", sts, "--report", report)[0] == 0
    data = _json(report)
    assert data["audit"]["disjoint"] is True
    assert len(data["triples"]) == data["size"]
    assert _run(capsys, "verify", "--instance", sts, "--matching", report)[0] == 0


def test_fresh_array(capsys, tmp_path):
    array = str(tmp_path / "array.json")
    report = str(tmp_path / "report.json")
    assert main(["gen", "--kind", "fresh-augment", "--n", "8", "--r", "2", "--mix-steps", "200",
                 "--out", array]) == 0
    assert _json(array)["kind"] == "array"
    assert _run(capsys, "solve", "--kind", "array", "--in", array, "--report", report)[0] == 0
    assert _json(report)["kind"] == "array"


def test_typicality(capsys, tmp_path):
    path = str(tmp_path / "z16.json")
    out = str(tmp_path / "typ.json")
    main(["gen", "--kind", "cyclic", "--n", "16", "--out", path])
    code, _ = _run(capsys, "typicality", "--in", path, "--pred", "coloured-typical", "--eps", "1.0", "--out", out)
    assert code == 0
    data = _json(out)
    assert data["passed"] is True and data["p"] == 1.0


def test_shadow_typicality(capsys, tmp_path):
    path = str(tmp_path / "sts.json")
    out = str(tmp_path / "typ.json")
    main(["gen", "--kind", "bose", "--n", "15", "--out", path])
    assert _run(capsys, "typicality", "--in", path, "--pred", "shadow", "--eps", "0.5", "--p", "0.5",
                "--out", out)[0] == 0
    assert _json(out)["predicate"] == "shadow-typical"


def test_nibble_stats(capsys, tmp_path):
    path = str(tmp_path / "z32.json")
    stats = tmp_path / "rounds.csv"
    out = str(tmp_path / "m.json")
    main(["gen", "--kind", "cyclic", "--n", "32", "--out", path])
    code, _ = _run(capsys, "nibble", "--in", path, "--q", "0.2", "--stats", str(stats), "--out", out)
    assert code == 0
    frame = pd.read_csv(stats)
    assert list(frame.columns) == ["round", "chosen", "gained", "uncovered", "q", "q_hat"]
    assert frame["gained"].sum() == len(_json(out)["edges"])


def test_augment_trace(capsys, tmp_path, cyclic5):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"kind": "matching", "edges": []}))
    trace = tmp_path / "trace.csv"
    out = str(tmp_path / "m.json")
    code, _ = _run(capsys, "augment", "--input-graph", cyclic5, "--input-matching", str(empty),
                   "--trace", str(trace), "--out", out)
    assert code == 0
    frame = pd.read_csv(trace)
    assert list(frame.columns) == ["iter", "plan_shape", "p1", "p2", "p3", "ledger"]
    assert len(frame) == len(_json(out)["edges"])


def test_expand_probe(capsys, tmp_path):
    path = str(tmp_path / "z16.json")
    out = str(tmp_path / "probe.json")
    main(["gen", "--kind", "cyclic", "--n", "16", "--out", path])
    code, _ = _run(capsys, "expand", "--in", path, "--d", "2", "--t", "1", "--trials", "3",
                   "--stability", "--out", out)
    assert code == 0
    data = _json(out)
    assert data["kind"] == "probe"
    assert data["trials"] == 3
    assert "samples" not in data
    assert data["stability"]["trials"] == 3


def test_bench(capsys, tmp_path):
    out = tmp_path / "bench.csv"
    code, _ = _run(capsys, "bench", "--kinds", "latin", "steiner", "--n", "9", "--seeds", "0,1",
                   "--no-timing", "--restarts", "2", "--out", str(out))
    assert code == 0
    assert len(pd.read_csv(out)) == 4
    assert (tmp_path / "bench.summary.csv").is_file()


def test_bench_is_byte_stable(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        main(["bench", "--kinds", "latin", "--n", "7", "--seeds", "0", "--no-timing", "--out", str(path)])
    assert paths[0].read_bytes() == paths[1].read_bytes()
