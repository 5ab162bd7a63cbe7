import pytest

from corpus import corpus_entry
from paramifds.arena import build_exploded, load_arena_a
from paramifds.decomp import TreeDecomposition
from paramifds.errors import DecompositionMismatch, UnknownVertex
from paramifds.samectx import build_samectx, preprocess_same_bag, same_context_query
from paramifds.summaries import compute_summaries


def test_arena_a():
    a = load_arena_a()
    sc = build_samectx(compute_summaries(build_exploded(a)))
    v = a.by_name
    assert same_context_query(sc, v["s_m"], 0, v["e_m"], 1)
    assert same_context_query(sc, v["s_g"], 0, v["e_g"], 1)
    assert not same_context_query(sc, v["s_m"], 1, v["e_m"], 1)
    assert not same_context_query(sc, v["s_m"], 0, v["e_g"], 1)
    assert same_context_query(sc, v["c1"], 1, v["c1"], 1)


def test_unknown_vertex():
    a = load_arena_a()
    sc = build_samectx(compute_summaries(build_exploded(a)))
    with pytest.raises(UnknownVertex):
        same_context_query(sc, 99, 0, 0, 0)
    with pytest.raises(UnknownVertex):
        same_context_query(sc, 0, 7, 0, 0)


def test_wrong_decomposition_rejected():
    a = load_arena_a()
    sg = compute_summaries(build_exploded(a))
    bogus = TreeDecomposition((frozenset({0, 1}),), (-1,))
    with pytest.raises(DecompositionMismatch):
        preprocess_same_bag(a.func_by_name["main"], sg, bogus)


def test_matches_oracle_on_corpus():
    checked = 0
    for seed in range(60):
        entry = corpus_entry(seed)
        if entry is None:
            continue
        a, ex, _, scvp = entry
        sc = build_samectx(compute_summaries(ex))
        for x in range(ex.size):
            for y in range(ex.size):
                assert sc.query_x(x, y) == (y in scvp[x]), (seed, ex.split(x), ex.split(y))
        checked += 1
    assert checked >= 45


def test_table_lookup_any_bag():
    a = load_arena_a()
    sg = compute_summaries(build_exploded(a))
    sc = build_samectx(sg)
    main = a.func_by_name["main"]
    tab = sc.tables[main]
    nf = a.nfacts
    for l1 in range(a.functions[main].count * nf):
        for l2 in range(a.functions[main].count * nf):
            want = sc.query_x(a.functions[main].first * nf + l1, a.functions[main].first * nf + l2)
            assert tab.reaches(l1, l2) == want
