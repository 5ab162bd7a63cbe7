"""Same-context reachability over balanced tree decompositions of each CFG.

Every function keeps two tables of bit rows over its local exploded vertices
(``local = (vertex - first) * |D*| + fact``): ``fwd[x]`` has bit ``y`` when
``x`` is known to reach ``y`` inside the function's same-context view, and
``rev[y]`` mirrors it.  Preprocessing first closes every bag (leaves up, then
back down), then pushes reachability from each bag to all its ancestor bags.
A query meets in the middle at the LCA of the two designated bags.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arena import Arena
from .decomp import LcaIndex, TreeDecomposition, balance, decompose_cfg, verify_decomposition
from .errors import DecompositionMismatch, UnknownVertex
from .summaries import SummaryGraph


@dataclass
class FunctionTables:
    func: int
    nfacts: int
    td: TreeDecomposition
    fwd: list[int]
    rev: list[int]
    bagmask: list[int]
    top: list[int]  # designated (shallowest) bag of each local vertex
    lca: LcaIndex | None = None

    def __post_init__(self):
        if self.lca is None:
            self.lca = LcaIndex(self.td.parent)

    def reaches(self, l1: int, l2: int, bag1: int | None = None, bag2: int | None = None) -> bool:
        nf = self.nfacts
        b1 = self.top[l1 // nf] if bag1 is None else bag1
        b2 = self.top[l2 // nf] if bag2 is None else bag2
        b = self.lca.lca(b1, b2)
        return (self.fwd[l1] & self.rev[l2] & self.bagmask[b]) != 0


def _close_bag(fwd: list[int], rev: list[int], elems: list[int], mask: int) -> None:
    """Warshall closure of the reachability rows restricted to one bag."""
    for k in elems:
        self_bit = 1 << k
        ins = rev[k] & mask
        if ins == self_bit:
            continue
        outs = fwd[k] & mask
        if outs == self_bit:
            continue
        m = ins ^ self_bit
        while m:
            low = m & -m
            fwd[low.bit_length() - 1] |= outs
            m ^= low
        m = outs ^ self_bit
        while m:
            low = m & -m
            rev[low.bit_length() - 1] |= ins
            m ^= low


def _initial_rows(view: list[list[int]]) -> tuple[list[int], list[int]]:
    n = len(view)
    fwd = [1 << x for x in range(n)]
    rev = [1 << x for x in range(n)]
    for x, ys in enumerate(view):
        for y in ys:
            fwd[x] |= 1 << y
            rev[y] |= 1 << x
    return fwd, rev


def preprocess_same_bag(i: int, sg: SummaryGraph, t: TreeDecomposition | None = None) -> FunctionTables:
    arena = sg.arena
    cfg = arena.cfg_undirected(i)
    if t is None:
        t = balance(decompose_cfg(cfg))
    else:
        verdict = verify_decomposition(cfg, t)
        if not verdict:
            raise DecompositionMismatch(f"function {arena.functions[i].name!r}: {verdict}")
    nf = sg.ex.nfacts
    fwd, rev = _initial_rows(sg.function_view(i))
    full = (1 << nf) - 1
    bagmask = []
    elems = []
    for bag in t.bags:
        m = 0
        for u in bag:
            m |= full << (u * nf)
        bagmask.append(m)
        elems.append(sorted(u * nf + d for u in bag for d in range(nf)))

    # identical copies of the parent bag add nothing to the closure
    skip = [p >= 0 and t.bags[p] == t.bags[b] for b, p in enumerate(t.parent)]
    post = list(reversed(t.preorder))  # children before parents
    for b in post:
        if not skip[b]:
            _close_bag(fwd, rev, elems[b], bagmask[b])
    for b in t.preorder[1:]:
        if not skip[b]:
            _close_bag(fwd, rev, elems[b], bagmask[b])

    top = [-1] * arena.functions[i].count
    for b in t.preorder:
        for u in t.bags[b]:
            if top[u] < 0:
                top[u] = b
    return FunctionTables(i, nf, t, fwd, rev, bagmask, top)


def preprocess_ancestor(tables: FunctionTables) -> FunctionTables:
    t = tables.td
    nf = tables.nfacts
    fwd, rev, bagmask = tables.fwd, tables.rev, tables.bagmask
    anc = [0] * len(t.bags)
    for b in t.preorder:
        p = t.parent[b]
        if p < 0:
            continue
        anc[b] = anc[p] | bagmask[p]
        above = anc[b]
        sep = bagmask[b] & bagmask[p]
        # separator rows already hold the parent's complete ancestor reachability
        for u in t.bags[b]:
            for x in range(u * nf, u * nf + nf):
                for rows in (fwd, rev):
                    acc = 0
                    m = rows[x] & sep
                    while m:
                        low = m & -m
                        acc |= rows[low.bit_length() - 1]
                        m ^= low
                    rows[x] |= acc & above
    return tables


class SameCtxIndex:
    """Same-context tables for every function of an arena."""

    def __init__(self, arena: Arena, tables: list[FunctionTables]):
        self.arena = arena
        self.tables = tables
        self.nfacts = arena.nfacts
        self._fg = [v.func for v in arena.vertices]
        self._first = [f.first for f in arena.functions]

    @classmethod
    def build(cls, sg: SummaryGraph) -> SameCtxIndex:
        tables = [preprocess_ancestor(preprocess_same_bag(i, sg)) for i in range(len(sg.arena.functions))]
        return cls(sg.arena, tables)

    def query_x(self, x1: int, x2: int) -> bool:
        """Same-context query on global exploded ids."""
        nf = self.nfacts
        u1, u2 = x1 // nf, x2 // nf
        f = self._fg[u1]
        if f != self._fg[u2]:
            return False
        if x1 == x2:
            return True
        base = self._first[f] * nf
        return self.tables[f].reaches(x1 - base, x2 - base)

    def query(self, u1: int, d1: int, u2: int, d2: int) -> bool:
        nv = len(self._fg)
        for u in (u1, u2):
            if not 0 <= u < nv:
                raise UnknownVertex(f"unknown vertex {u!r}")
        for d in (d1, d2):
            if not 0 <= d < self.nfacts:
                raise UnknownVertex(f"unknown fact {d!r}")
        return self.query_x(u1 * self.nfacts + d1, u2 * self.nfacts + d2)


def build_samectx(sg: SummaryGraph) -> SameCtxIndex:
    return SameCtxIndex.build(sg)


def same_context_query(idx: SameCtxIndex, u1: int, d1: int, u2: int, d2: int) -> bool:
    return idx.query(u1, d1, u2, d2)
