import io
import struct

import pytest

from corpus import corpus_entry
from paramifds.arena import EdgeClass, build_exploded, load_arena, load_arena_a
from paramifds.engine import load_index, mivp, preprocess, query, same_context, save_index
from paramifds.errors import CorruptIndex, FingerprintMismatch, IndexMismatch, UnknownVertex, VersionMismatch
from paramifds.harness import random_arena


@pytest.fixture(scope="module")
def idx_a():
    return preprocess(load_arena_a())


def test_arena_a_queries(idx_a):
    assert query(idx_a, "s_m", 0, "e_g", "a").verdict
    assert not query(idx_a, "s_m", "a", "e_m", "a").verdict
    assert not same_context(idx_a, "s_m", 0, "e_g", "a").verdict
    assert same_context(idx_a, "s_m", "0", "e_m", "a").verdict
    assert mivp(idx_a, "s_m", ["a"], "e_m") == {1}
    assert mivp(idx_a, "s_m", [], "e_g") == {1}


def test_arena_a_witness(idx_a):
    res = query(idx_a, "s_m", 0, "e_g", "a", witness=True)
    a = idx_a.arena
    v = a.by_name
    assert [s[0] for s in res.witness] == ["sigma0", "call", "callgraph", "scvp"]
    assert res.witness[0] == ("sigma0", (v["s_m"], 0), (v["c1"], 0))
    assert res.witness[1] == ("call", (v["c1"], 0), (v["s_g"], 0))
    assert res.witness[3] == ("scvp", (v["s_g"], 0), (v["e_g"], 1))
    assert query(idx_a, "s_m", "a", "e_m", "a", witness=True).witness is None


def test_unknown_names(idx_a):
    with pytest.raises(UnknownVertex):
        query(idx_a, "nowhere", 0, "e_g", 0)
    with pytest.raises(UnknownVertex):
        query(idx_a, "s_m", "b", "e_g", 0)


def check_witness(idx, ex, scvp, x1, x2, wit):
    nf = idx.nfacts
    join = lambda p: p[0] * nf + p[1]
    if len(wit) == 1:
        kind, a, b = wit[0]
        assert kind == "scvp" and join(a) == x1 and join(b) == x2 and x2 in scvp[x1]
        return
    (_, s0, c0), (_, c1, e1), (_, hops), (_, s3, e3) = wit
    assert join(s0) == x1 and join(c0) in scvp[x1]
    assert c1 == c0 and join(e1) in ex.succ(join(c0), EdgeClass.CALL_START)
    a = idx.arena
    assert hops[0] == (a.vertices[e1[0]].func, e1[1])
    edges = set(idx.callgraph.edges)
    assert all((join(h1), join(h2)) in edges for h1, h2 in zip(hops, hops[1:]))
    last_f, d5 = hops[-1]
    assert s3 == (a.functions[last_f].start, d5)
    assert join(e3) == x2 and x2 in scvp[join(s3)]


def test_queries_and_witnesses_match_oracle():
    checked = 0
    for seed in range(40):
        entry = corpus_entry(seed)
        if entry is None:
            continue
        a, ex, ivp, scvp = entry
        idx = preprocess(a)
        for x in range(ex.size):
            for y in range(ex.size):
                truth = y in ivp[x]
                assert idx.ask(x, y) == truth
                if truth:
                    check_witness(idx, ex, scvp, x, y, idx.witness(x, y))
        checked += 1
    assert checked >= 30


def test_round_trip_file(tmp_path, idx_a):
    path = tmp_path / "a.idx"
    save_index(idx_a, path)
    back = load_index(path, arena=idx_a.arena)
    assert back == idx_a
    assert query(back, "s_m", 0, "e_g", "a").verdict


def test_deterministic_bytes():
    a = load_arena(random_arena(5))
    assert preprocess(a).to_bytes() == preprocess(load_arena(random_arena(5))).to_bytes()


def test_fingerprint_rejection(idx_a):
    other = load_arena(random_arena(1))
    with pytest.raises(FingerprintMismatch):
        load_index(idx_a.to_bytes(), arena=other)
    with pytest.raises(IndexMismatch):
        query(idx_a, 0, 0, 0, 0, arena=other)


def test_version_rejected(idx_a):
    raw = bytearray(idx_a.to_bytes())
    raw[8:10] = struct.pack("<H", 99)
    with pytest.raises(VersionMismatch):
        load_index(bytes(raw))


@pytest.mark.parametrize(
    "damage",
    [
        lambda b: b"XXXXXXXX" + b[8:],
        lambda b: b[: len(b) // 2],
        lambda b: b[:-1] + bytes([b[-1] ^ 0xFF]),
        lambda b: b + b"\0",
    ],
    ids=["magic", "truncated", "checksum", "trailing"],
)
def test_corruption_detected(idx_a, damage):
    with pytest.raises(CorruptIndex):
        load_index(damage(idx_a.to_bytes()))


def test_save_to_stream(idx_a):
    buf = io.BytesIO()
    save_index(idx_a, buf)
    assert load_index(io.BytesIO(buf.getvalue())) == idx_a


def test_timings_recorded(idx_a):
    assert idx_a.timings["total"] >= 0
    assert build_exploded(idx_a.arena).size == 12
