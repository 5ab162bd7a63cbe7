"""Synthetic arenas, query workloads and the benchmark runner."""

from __future__ import annotations

import csv
import random
import statistics
import time
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .arena import Arena, build_call_graph, build_exploded, load_arena
from .baselines import DemandSolver, DyckOracle, Mode, exhaustive_tabulate
from .decomp import balance, compute_pot, decompose_cfg
from .engine import preprocess
from .errors import EngineDisagreement, InfeasibleSpec
from .summaries import ViewTag, compute_summaries, reach_view, view

TEMPLATES = ("reach", "uninit", "nullness")
CSV_HEADER = ("engine", "arena", "exploded_edges", "preprocess_s", "mean_query_us", "queries")


# ---------------------------------------------------------------------------
# Random small arenas for oracle sweeps


def _random_rel(rng: random.Random, nf: int, density: float) -> list[list[int]]:
    pairs = {(0, 0)}
    for s in range(nf):
        for d in range(1, nf):
            if rng.random() < (density if s else density / 2):
                pairs.add((s, d))
    return [list(p) for p in sorted(pairs)]


def random_arena(
    seed: int,
    max_functions: int = 6,
    max_vertices: int = 12,
    max_facts: int = 3,
    recursion: float = 0.2,
) -> dict[str, Any]:
    """Unstructured random arena document; calls may be recursive."""
    rng = random.Random(seed)
    k = rng.randint(1, max_functions)
    nfacts = rng.randint(0, max_facts)
    nf = nfacts + 1
    names = [f"f{i}" for i in range(k)]
    functions = []
    for i in range(k):
        m = rng.randint(2, max_vertices)
        ncalls = rng.randint(0, (m - 2) // 2)
        p = f"{names[i]}_"
        verts = [{"id": p + "s", "kind": "start"}]
        units: list[tuple[str, str]] = []  # (entry, exit) per unit
        calls = []
        for c in range(ncalls):
            if i + 1 < k and rng.random() >= recursion:
                callee = names[rng.randint(i + 1, k - 1)]
            else:
                callee = names[rng.randrange(k)]
            cid, rid = f"{p}c{c}", f"{p}r{c}"
            verts.append({"id": cid, "kind": "call", "callee": callee, "retsite": rid})
            verts.append({"id": rid, "kind": "retsite"})
            units.append((cid, rid))
            calls.append(
                {"call": cid, "call_rel": _random_rel(rng, nf, 0.4), "ret_rel": _random_rel(rng, nf, 0.4)}
            )
        for j in range(m - 2 - 2 * ncalls):
            vid = f"{p}v{j}"
            verts.append({"id": vid, "kind": "plain"})
            units.append((vid, vid))
        verts.append({"id": p + "e", "kind": "exit"})
        rng.shuffle(units)
        seq = [(p + "s", p + "s"), *units, (p + "e", p + "e")]
        edges: dict[tuple[str, str], list[list[int]]] = {}
        for (_, a), (b, _) in zip(seq, seq[1:]):
            if rng.random() < 0.85:
                edges[(a, b)] = _random_rel(rng, nf, 0.35)
        for (cid, rid) in (u for u in units if u[0] != u[1]):
            edges[(cid, rid)] = _random_rel(rng, nf, 0.35)
        sources = [x for _, x in seq if x != p + "e"]
        targets = [x for x, _ in seq]
        for _ in range(rng.randint(0, m)):
            a, b = rng.choice(sources), rng.choice(targets)
            if (a, b) not in edges and not b.startswith(p + "r"):
                edges[(a, b)] = _random_rel(rng, nf, 0.35)
        functions.append(
            {
                "name": names[i],
                "vertices": verts,
                "edges": [{"from": a, "to": b, "rel": r} for (a, b), r in edges.items()],
                "calls": calls,
            }
        )
    return {"facts": [f"d{j}" for j in range(1, nf)], "bandwidth": max(4, nf), "functions": functions}


# ---------------------------------------------------------------------------
# Structured generator


@dataclass(frozen=True)
class GenSpec:
    functions: int = 10
    lines: tuple[int, int] = (8, 40)
    width: int = 2
    depth: int = 4
    facts: int = 2
    calls: int = 2
    template: str = "reach"
    seed: int = 0
    bandwidth: int = 4


class _FunctionBuilder:
    def __init__(self, name: str, rng: random.Random, spec: GenSpec, callees: list[str]):
        self.name = name
        self.rng = rng
        self.spec = spec
        self.callees = list(callees)
        self.verts: list[dict[str, Any]] = []
        self.edges: list[tuple[str, str, str]] = []  # from, to, relation tag
        self.calls: list[str] = []
        self.n = 0

    def vertex(self, kind: str, **extra) -> str:
        vid = f"{self.name}.{self.n}"
        self.n += 1
        self.verts.append({"id": vid, "kind": kind, **extra})
        return vid

    def block(self, budget: int) -> tuple[str, str]:
        """Structured block with about ``budget`` vertices; returns (entry, exit)."""
        rng = self.rng
        structured = self.spec.width >= 2
        if self.callees and budget >= 2 and rng.random() < 0.35:
            callee = self.callees.pop()
            r_id = f"{self.name}.{self.n + 1}"
            c = self.vertex("call", callee=callee, retsite=r_id)
            r = self.vertex("retsite")
            self.edges.append((c, r, "local"))
            self.calls.append(c)
            if budget <= 2:
                return c, r
            b_in, b_out = self.block(budget - 2)
            self.edges.append((r, b_in, "stmt"))
            return c, b_out
        if budget <= 1:
            v = self.vertex("plain")
            return v, v
        choice = rng.random()
        if structured and budget >= 4 and choice < 0.25:
            cond = self.vertex("plain")
            a_in, a_out = self.block((budget - 2) // 2)
            b_in, b_out = self.block(budget - 2 - (budget - 2) // 2)
            join = self.vertex("plain")
            self.edges += [(cond, a_in, "id"), (cond, b_in, "id"), (a_out, join, "stmt"), (b_out, join, "stmt")]
            return cond, join
        if structured and budget >= 3 and choice < 0.45:
            head = self.vertex("plain")
            b_in, b_out = self.block(budget - 1)
            self.edges += [(head, b_in, "id"), (b_out, head, "stmt")]
            return head, head
        first = max(1, budget // 2) if rng.random() < 0.5 else 1
        a_in, a_out = self.block(first)
        b_in, b_out = self.block(budget - first)
        self.edges.append((a_out, b_in, "stmt"))
        return a_in, b_out

    def build(self, lines: int) -> None:
        s = self.vertex("start")
        b_in, b_out = self.block(max(1, lines - 2))
        while self.callees:  # calls the block did not place go at the end
            callee = self.callees.pop()
            r_id = f"{self.name}.{self.n + 1}"
            c = self.vertex("call", callee=callee, retsite=r_id)
            r = self.vertex("retsite")
            self.edges += [(b_out, c, "stmt"), (c, r, "local")]
            self.calls.append(c)
            b_out = r
        e = self.vertex("exit")
        self.edges += [(s, b_in, "entry"), (b_out, e, "stmt")]


class _Relations:
    """Flow relations for one analysis template over facts 1..|D|."""

    def __init__(self, rng: random.Random, spec: GenSpec):
        self.rng = rng
        self.spec = spec
        nf = spec.facts + 1
        self.nf = nf
        facts = list(range(1, nf))
        rng.shuffle(facts)
        # facts shared with callees; the rest are locals
        self.shared = sorted(facts[: max(1, len(facts) // 2)]) if facts else []
        self.local = sorted(set(range(1, nf)) - set(self.shared))

    def identity(self) -> list[list[int]]:
        return [[d, d] for d in range(self.nf)]

    def statement(self) -> list[list[int]]:
        rng, nf, t = self.rng, self.nf, self.spec.template
        if nf == 1:
            return [[0, 0]]
        target = rng.randrange(1, nf)
        pairs = {(d, d) for d in range(nf)}
        kind = rng.random()
        if t == "reach":
            # definition of target: kills old, generates new with some probability
            if kind < 0.4:
                pairs.discard((target, target))
                pairs.add((0, target))
            elif kind < 0.7:
                src = rng.randrange(1, nf)
                pairs.discard((target, target))
                pairs.add((src, target))
        elif t == "uninit":
            # target := f(src): uninitialized if src is
            if kind < 0.6:
                src = rng.randrange(1, nf)
                pairs.discard((target, target))
                pairs.add((src, target))
                if rng.random() < 0.3:
                    pairs.add((rng.randrange(1, nf), target))
        else:
            # nullness-like: x = null / x = new / x = y
            if kind < 0.25:
                pairs.add((0, target))
            elif kind < 0.55:
                pairs.discard((target, target))
            elif kind < 0.85:
                src = rng.randrange(1, nf)
                pairs.discard((target, target))
                pairs.add((src, target))
        pairs.add((0, 0))
        return [list(p) for p in sorted(pairs)]

    def entry(self) -> list[list[int]]:
        if self.spec.template == "uninit":
            return [[0, 0], *([0, d] for d in self.local), *([d, d] for d in self.shared)]
        return self.identity()

    def local_edge(self) -> list[list[int]]:
        return [[0, 0], *([d, d] for d in self.local)]

    def call(self) -> list[list[int]]:
        pairs = {(0, 0)} | {(d, d) for d in self.shared}
        if self.shared and self.local and self.rng.random() < 0.5:
            # pass a local as an argument bound to a shared fact
            pairs.add((self.rng.choice(self.local), self.rng.choice(self.shared)))
        return [list(p) for p in sorted(pairs)]

    def ret(self) -> list[list[int]]:
        pairs = {(0, 0)} | {(d, d) for d in self.shared}
        if self.shared and self.local and self.rng.random() < 0.5:
            pairs.add((self.rng.choice(self.shared), self.rng.choice(self.local)))
        return [list(p) for p in sorted(pairs)]


def _hidden_forest(rng: random.Random, k: int, depth: int) -> list[int]:
    parent = [-1] * k
    level = [1] * k
    open_ = [0] if depth > 1 else []
    for i in range(1, k):
        if not open_ or rng.random() < 0.02:
            parent[i] = -1
        else:
            # prefer shallow parents so the forest stays bushy
            a, b = rng.choice(open_), rng.choice(open_)
            parent[i] = a if level[a] <= level[b] else b
            level[i] = level[parent[i]] + 1
        if level[i] < depth:
            open_.append(i)
    return parent


def generate(spec: GenSpec, attempts: int = 8) -> Arena:
    """Structured arena whose CFG widths and call-graph depth respect the caps."""
    if spec.functions < 1:
        raise InfeasibleSpec("need at least one function")
    if spec.width < 1:
        raise InfeasibleSpec("a CFG with distinct start and exit has width at least 1")
    if spec.depth < 1:
        raise InfeasibleSpec("depth cap must be at least 1")
    if spec.calls > 0 and spec.functions > 1 and spec.depth < 2:
        raise InfeasibleSpec("calls between functions need a call-graph depth of at least 2")
    if spec.template not in TEMPLATES:
        raise InfeasibleSpec(f"unknown template {spec.template!r}")
    lo, hi = spec.lines
    if lo < 2 or hi < lo:
        raise InfeasibleSpec("lines per function must satisfy 2 <= lo <= hi")
    if spec.facts < 0 or spec.calls < 0:
        raise InfeasibleSpec("negative fact or call count")
    if spec.bandwidth < 2 and spec.facts > 0:
        raise InfeasibleSpec("bandwidth below 2 cannot pass an argument")
    for attempt in range(attempts):
        arena = _generate_once(spec, attempt)
        if _within_caps(arena, spec):
            return arena
    raise InfeasibleSpec(f"no arena within the caps after {attempts} attempts")


def _generate_once(spec: GenSpec, attempt: int) -> Arena:
    rng = random.Random(f"{spec.seed}/{attempt}")
    k = spec.functions
    parent = _hidden_forest(rng, k, spec.depth)
    names = [f"f{i}" for i in range(k)]
    rels = _Relations(rng, spec)
    functions = []
    for i in range(k):
        ancestors = []
        p = parent[i]
        while p >= 0:
            ancestors.append(p)
            p = parent[p]
        callees: list[str] = []
        if ancestors and spec.calls:
            callees.append(names[ancestors[0]])
            extra = rng.randint(0, spec.calls - 1)
            callees += [names[rng.choice(ancestors)] for _ in range(extra)]
        b = _FunctionBuilder(names[i], rng, spec, callees)
        b.build(rng.randint(*spec.lines))
        edges = []
        for a, c, tag in b.edges:
            if tag == "local":
                rel = rels.local_edge()
            elif tag == "entry":
                rel = rels.entry()
            elif tag == "id":
                rel = rels.identity()
            else:
                rel = rels.statement()
            edges.append({"from": a, "to": c, "rel": rel})
        functions.append(
            {
                "name": names[i],
                "vertices": b.verts,
                "edges": edges,
                "calls": [{"call": c, "call_rel": rels.call(), "ret_rel": rels.ret()} for c in b.calls],
            }
        )
    doc = {
        "facts": [f"x{j}" for j in range(1, spec.facts + 1)],
        "bandwidth": spec.bandwidth,
        "functions": functions,
    }
    return load_arena(doc)


def _within_caps(arena: Arena, spec: GenSpec) -> bool:
    for f in arena.functions:
        if decompose_cfg(arena.cfg_undirected(f.index)).width > spec.width:
            return False
    return compute_pot(build_call_graph(arena).undirected()).depth <= spec.depth


def arena_stats(arena: Arena) -> tuple[list[tuple[str, int, int]], int]:
    rows = []
    for f in arena.functions:
        td = decompose_cfg(arena.cfg_undirected(f.index))
        rows.append((f.name, td.width, balance(td).height))
    depth = compute_pot(build_call_graph(arena).undirected()).depth
    return rows, depth


# ---------------------------------------------------------------------------
# Workloads and benchmarking


def gen_workload(a: Arena, m: int, seed: int) -> list[tuple[int, int, int, int]]:
    """m uniform (u1, d1, u2, d2) tuples over vertex ids and fact indices."""
    n = len(a.vertices)
    if m > n:
        raise ValueError(f"workload size {m} exceeds the vertex count {n}")
    rng = random.Random(seed)
    nf = a.nfacts
    return [(rng.randrange(n), rng.randrange(nf), rng.randrange(n), rng.randrange(nf)) for _ in range(m)]


@dataclass
class Engine:
    """A query engine: ``prepare(arena)`` builds state, ``answer`` decides one tuple."""

    name: str
    prepare: Callable[[Arena], Any]
    answer: Callable[[Any, tuple[int, int, int, int]], bool]


def _param_engine() -> Engine:
    def answer(idx, q):
        nf = idx.nfacts
        return idx.ask(q[0] * nf + q[1], q[2] * nf + q[3])

    return Engine("param", preprocess, answer)


def _ivp_engine() -> Engine:
    def prepare(a):
        return view(compute_summaries(build_exploded(a)), ViewTag.IVP)

    def answer(v, q):
        nf = v.graph.ex.nfacts
        return reach_view(v, q[0] * nf + q[1], q[2] * nf + q[3])

    return Engine("ivp-dfs", prepare, answer)


def _exhaustive_engine() -> Engine:
    def prepare(a):
        return build_exploded(a), {}

    def answer(state, q):
        ex, memo = state
        nf = ex.nfacts
        src = q[0] * nf + q[1]
        if src not in memo:
            memo[src] = exhaustive_tabulate(ex, [src])
        return q[2] * nf + q[3] in memo[src]

    return Engine("exhaustive", prepare, answer)


def _demand_engine() -> Engine:
    return Engine("demand", lambda a: DemandSolver(build_exploded(a)), lambda s, q: s.query(*q))


def _dyck_engine() -> Engine:
    def answer(oracle, q):
        nf = oracle.ex.nfacts
        return oracle.reach(q[0] * nf + q[1], q[2] * nf + q[3], Mode.IVP)

    return Engine("dyck", lambda a: DyckOracle(build_exploded(a)), answer)


ENGINES: dict[str, Callable[[], Engine]] = {
    "param": _param_engine,
    "ivp-dfs": _ivp_engine,
    "exhaustive": _exhaustive_engine,
    "demand": _demand_engine,
    "dyck": _dyck_engine,
}


def get_engine(e: str | Engine) -> Engine:
    if isinstance(e, Engine):
        return e
    try:
        return ENGINES[e]()
    except KeyError:
        raise ValueError(f"unknown engine {e!r}; choose from {', '.join(ENGINES)}") from None


@dataclass
class BenchRecord:
    engine: str
    arena: str
    exploded_edges: int
    preprocess_s: float
    mean_query_us: float
    queries: int
    runs: list[float] = field(default_factory=list, repr=False)

    def row(self) -> list[str]:
        return [
            self.engine,
            self.arena,
            str(self.exploded_edges),
            f"{self.preprocess_s:.6f}",
            f"{self.mean_query_us:.3f}",
            str(self.queries),
        ]


def bench(
    a: Arena,
    workload: Sequence[tuple[int, int, int, int]],
    engines: Iterable[str | Engine],
    *,
    arena_id: str = "arena",
    repeats: int = 3,
) -> list[BenchRecord]:
    """Cross-check every engine on the workload, then time them.

    Nothing is timed until all engines agree on every tuple.
    """
    engines = [get_engine(e) for e in engines]
    answers: dict[str, list[bool]] = {}
    for e in engines:
        state = e.prepare(a)
        answers[e.name] = [bool(e.answer(state, q)) for q in workload]
    for k, q in enumerate(workload):
        got = {name: ans[k] for name, ans in answers.items()}
        if len(set(got.values())) > 1:
            raise EngineDisagreement(q, got)

    edges = build_exploded(a).edge_count()
    records = []
    for e in engines:
        prep, means = [], []
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            state = e.prepare(a)
            t1 = time.perf_counter()
            for q in workload:
                e.answer(state, q)
            t2 = time.perf_counter()
            prep.append(t1 - t0)
            means.append((t2 - t1) / len(workload) * 1e6 if workload else 0.0)
        records.append(
            BenchRecord(e.name, arena_id, edges, statistics.median(prep), statistics.median(means), len(workload), means)
        )
    return records


def write_csv(records: Iterable[BenchRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(r.row())
