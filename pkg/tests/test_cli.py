import csv
import json

import pytest

from paramifds.arena import arena_a_path
from paramifds.cli import main

A = str(arena_a_path())


def test_validate_ok(capsys):
    assert main(["validate", A]) == 0
    assert "2 functions" in capsys.readouterr().out


def test_validate_bad(tmp_path, capsys):
    doc = json.loads(arena_a_path().read_text())
    doc["functions"][0]["vertices"][1]["callee"] = "nope"
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    assert main(["validate", str(p)]) == 1
    assert "dangling callee" in capsys.readouterr().err


def test_missing_file_is_io_error(tmp_path):
    assert main(["validate", str(tmp_path / "none.json")]) == 3


def test_stats_csv(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["stats", A, "--csv", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["function", "width", "height"]
    assert rows[-1][0] == "callgraph"
    assert "call graph depth" in capsys.readouterr().out


def test_gen_preprocess_query(tmp_path, capsys):
    arena = tmp_path / "g.json"
    idx = tmp_path / "g.idx"
    assert main(["gen", "--functions", "4", "--seed", "3", "-o", str(arena)]) == 0
    assert main(["preprocess", str(arena), "-o", str(idx)]) == 0
    doc = json.loads(arena.read_text())
    s = doc["functions"][0]["vertices"][0]["id"]
    e = doc["functions"][0]["vertices"][-1]["id"]
    capsys.readouterr()
    assert main(["query", str(idx), "--from", f"{s}:0", "--to", f"{e}:0", "--arena", str(arena)]) == 0
    assert capsys.readouterr().out.strip() in ("true", "false")


def test_query_witness_and_same_context(tmp_path, capsys):
    idx = tmp_path / "a.idx"
    main(["preprocess", A, "-o", str(idx)])
    capsys.readouterr()
    assert main(["query", str(idx), "--from", "s_m:0", "--to", "e_g:a", "--witness"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("true") and "callgraph" in out
    assert main(["query", str(idx), "--from", "s_m:0", "--to", "e_g:a", "--same-context"]) == 0
    assert capsys.readouterr().out.strip() == "false"
    assert main(["query", str(idx), "--from", "s_m:0", "--to", "e_g:a", "--engine", "dyck"]) == 0
    assert capsys.readouterr().out.strip() == "true"


def test_query_wrong_arena(tmp_path):
    idx = tmp_path / "a.idx"
    other = tmp_path / "o.json"
    main(["preprocess", A, "-o", str(idx)])
    main(["gen", "--functions", "2", "-o", str(other)])
    assert main(["query", str(idx), "--from", "s_m:0", "--to", "e_g:a", "--arena", str(other)]) == 3


def test_query_unknown_vertex(tmp_path):
    idx = tmp_path / "a.idx"
    main(["preprocess", A, "-o", str(idx)])
    assert main(["query", str(idx), "--from", "zz:0", "--to", "e_g:a"]) == 1


def test_bad_endpoint_syntax(tmp_path):
    with pytest.raises(SystemExit):
        main(["query", "x.idx", "--from", "s_m", "--to", "e_g:a"])


def test_bench(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", A, "--queries", "6", "--engines", "param,demand,dyck", "--csv", str(out), "--repeats", "1"]) == 0
    assert len(list(csv.reader(out.open()))) == 4


def test_bench_disagreement_exit(tmp_path, monkeypatch):
    from paramifds import harness

    monkeypatch.setitem(harness.ENGINES, "liar", lambda: harness.Engine("liar", lambda a: None, lambda s, q: True))
    assert main(["bench", A, "--queries", "6", "--engines", "param,liar", "--repeats", "1"]) == 2
