import pytest

from corpus import corpus_entry
from helpers import chain_arena
from paramifds.arena import build_exploded, load_arena, load_arena_a
from paramifds.baselines import DemandSolver, DyckOracle, Mode, demand_tabulate, dyck_reach, exhaustive_tabulate
from paramifds.errors import BoundExceeded
from paramifds.harness import random_arena


@pytest.fixture
def arena_a():
    a = load_arena_a()
    return a, build_exploded(a)


def test_dyck_arena_a(arena_a):
    a, ex = arena_a
    x = lambda v, d: a.by_name[v] * 2 + d
    assert dyck_reach(ex, x("s_m", 0), x("e_g", 1), Mode.IVP)
    assert not dyck_reach(ex, x("s_m", 0), x("e_g", 1), "scvp")
    assert dyck_reach(ex, x("s_m", 0), x("e_m", 1), "scvp")
    assert not dyck_reach(ex, x("s_m", 1), x("e_m", 1), "ivp")


def test_unmatched_return_not_followed(arena_a):
    a, ex = arena_a
    # From inside g with an empty stack, returning into main is not allowed.
    r = DyckOracle(ex).reachable(a.by_name["s_g"] * 2, Mode.IVP)
    assert all(y // 2 in (a.by_name["s_g"], a.by_name["e_g"]) for y in r)


def test_budget_raises():
    for seed in range(200):
        ex = build_exploded(load_arena(random_arena(seed)))
        try:
            DyckOracle(ex, budget=20).reachable(0)
        except BoundExceeded:
            return
    pytest.fail("tiny budget never exceeded")


def test_demand_and_exhaustive_agree_with_oracle():
    checked = 0
    for seed in range(50):
        entry = corpus_entry(seed)
        if entry is None:
            continue
        a, ex, ivp, _ = entry
        dm = DemandSolver(ex)
        for x in range(ex.size):
            assert dm.reachable(x) == ivp[x]
            assert exhaustive_tabulate(ex, [x]) == ivp[x]
        checked += 1
    assert checked >= 40


def test_demand_memo_and_persistent_work():
    a = load_arena(chain_arena(2))
    ex = build_exploded(a)
    dm = DemandSolver(ex)
    s = a.by_name["s_main"]
    assert demand_tabulate(dm, s, 1, a.by_name["e_main"], 1)
    first = dm.explored
    assert demand_tabulate(dm, s, 1, a.by_name["e_g"], 1)
    assert dm.explored == first
    assert not demand_tabulate(dm, s, 1, a.by_name["e_main"], 2)
