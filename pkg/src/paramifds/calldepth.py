"""Call-reach lists, the exploded call graph, the expanded POT and up/down tables."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .arena import Arena
from .decomp import POT
from .samectx import SameCtxIndex
from .summaries import SummaryGraph


def _bits(m: int):
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


@dataclass
class CallReachLists:
    """``masks[i][lx]`` has bit ``k*|D*| + d`` when local exploded vertex ``lx``
    of function ``i`` reaches ``(calls[k], d)`` inside the function's
    same-context view."""

    arena: Arena
    masks: list[list[int]]

    def slots(self, func: int, mask: int):
        """Decode a mask into global exploded ids of call vertices."""
        nf = self.arena.nfacts
        calls = self.arena.functions[func].calls
        for s in _bits(mask):
            k, d = divmod(s, nf)
            yield calls[k] * nf + d

    def lookup(self, x: int) -> list[int]:
        nf = self.arena.nfacts
        u = x // nf
        f = self.arena.functions[self.arena.vertices[u].func]
        mask = self.masks[f.index][x - f.first * nf]
        return list(self.slots(f.index, mask))


def step2_call_reach(sg: SummaryGraph) -> CallReachLists:
    arena = sg.arena
    nf = sg.ex.nfacts
    masks: list[list[int]] = []
    for f in arena.functions:
        view = sg.function_view(f.index)
        n = len(view)
        preds: list[list[int]] = [[] for _ in range(n)]
        for x, ys in enumerate(view):
            for y in ys:
                if y != x:
                    preds[y].append(x)
        mask = [0] * n
        work = []
        for k, c in enumerate(f.calls):
            lc = (c - f.first) * nf
            for d in range(nf):
                mask[lc + d] = 1 << (k * nf + d)
                work.append(lc + d)
        while work:
            y = work.pop()
            my = mask[y]
            for x in preds[y]:
                if my & ~mask[x]:
                    mask[x] |= my
                    work.append(x)
        masks.append(mask)
    return CallReachLists(arena, masks)


@dataclass
class ExplodedCallGraph:
    nfunctions: int
    nfacts: int
    edges: tuple[tuple[int, int], ...]  # node id = function * |D*| + fact

    @property
    def size(self) -> int:
        return self.nfunctions * self.nfacts

    @cached_property
    def succ(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.size)]
        for a, b in self.edges:
            out[a].append(b)
        return tuple(tuple(x) for x in out)

    @cached_property
    def pred(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.size)]
        for a, b in self.edges:
            out[b].append(a)
        return tuple(tuple(x) for x in out)

    def reachable(self, u: int, v: int) -> bool:
        """Plain search, used as a reference."""
        seen = {u}
        stack = [u]
        while stack:
            x = stack.pop()
            if x == v:
                return True
            for y in self.succ[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False

    def path(self, u: int, v: int) -> list[int] | None:
        prev = {u: -1}
        frontier = [u]
        for x in frontier:
            if x == v:
                out = [x]
                while prev[out[-1]] >= 0:
                    out.append(prev[out[-1]])
                return out[::-1]
            for y in self.succ[x]:
                if y not in prev:
                    prev[y] = x
                    frontier.append(y)
        return None


def step3_exploded_call_graph(arena: Arena, samectx: SameCtxIndex) -> ExplodedCallGraph:
    nf = arena.nfacts
    edges: set[tuple[int, int]] = set()
    for cs in arena.callsites:
        f = arena.functions[cs.caller]
        s = f.start * nf
        c = cs.call * nf
        for d3 in range(nf):
            targets = cs.call_rel.images[d3]
            if not targets:
                continue
            for d1 in range(nf):
                if samectx.query_x(s + d1, c + d3):
                    for d2 in targets:
                        edges.add((cs.caller * nf + d1, cs.callee * nf + d2))
    return ExplodedCallGraph(len(arena.functions), nf, tuple(sorted(edges)))


def expand_pot(p: POT, dstar: int) -> POT:
    """Replace every POT node by a chain of its |D*| exploded copies."""
    parent = []
    for f, pf in enumerate(p.parent):
        for d in range(dstar):
            if d:
                parent.append(f * dstar + d - 1)
            elif pf >= 0:
                parent.append(pf * dstar + dstar - 1)
            else:
                parent.append(-1)
    return POT(tuple(parent))


class ExpandedPot:
    """POT over the exploded call graph with preorder intervals and ancestor lists."""

    def __init__(self, pot: POT):
        self.pot = pot
        n = len(pot.parent)
        pre = [0] * n
        size = [1] * n
        order: list[int] = []
        stack = list(reversed(pot.roots))
        while stack:
            v = stack.pop()
            pre[v] = len(order)
            order.append(v)
            stack.extend(reversed(pot.children[v]))
        for v in reversed(order):
            p = pot.parent[v]
            if p >= 0:
                size[p] += size[v]
        self.pre = pre
        self.size = size
        self.order = order
        self.ancestors = [tuple(pot.ancestors(v)) for v in range(n)]

    @property
    def depth(self) -> int:
        return self.pot.depth

    def in_subtree(self, w: int, v: int) -> bool:
        return 0 <= self.pre[v] - self.pre[w] < self.size[w]


@dataclass
class UpDownTables:
    """``down[w]`` bit ``pre[v]-pre[w]`` set when w reaches v inside w's subtree;
    ``up[w]`` likewise for v reaching w."""

    up: list[int]
    down: list[int]


def _restricted_search(adj, start: int, lo: int, hi: int, pre: list[int]) -> int:
    mask = 1
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            off = pre[y] - lo
            if 0 <= off < hi and y not in seen:
                seen.add(y)
                mask |= 1 << off
                stack.append(y)
    return mask


def step4_up_down(cg: ExplodedCallGraph, t: ExpandedPot) -> UpDownTables:
    n = cg.size
    up = [0] * n
    down = [0] * n
    succ, pred = cg.succ, cg.pred
    for w in range(n):
        lo, hi = t.pre[w], t.size[w]
        down[w] = _restricted_search(succ, w, lo, hi, t.pre)
        up[w] = _restricted_search(pred, w, lo, hi, t.pre)
    return UpDownTables(up, down)


def call_graph_reachable(tbl: UpDownTables, t: ExpandedPot, u: int, v: int) -> bool:
    pre, size = t.pre, t.size
    pu, pv = pre[u], pre[v]
    up, down = tbl.up, tbl.down
    for w in t.ancestors[u]:
        pw = pre[w]
        if not pv - pw < size[w] or pv < pw:
            continue
        if up[w] >> (pu - pw) & 1 and down[w] >> (pv - pw) & 1:
            return True
    return False
