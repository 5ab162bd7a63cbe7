"""Function summaries by worklist, and the reachability views derived from them."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

from .arena import Arena, EdgeClass, ExplodedSupergraph


class SummaryGraph:
    """Exploded supergraph plus summary edges and per-function partial summaries.

    ``partial[i]`` is a bit table over ``(d1, local exploded vertex)`` of
    function ``i``; bit ``d1 * NX_i + lx`` is set when ``(d1, u, d)`` is a
    partial summary, i.e. some same-context path runs from ``(s_i, d1)`` to the
    local exploded vertex ``lx``.
    """

    def __init__(self, ex: ExplodedSupergraph, order: str = "fifo"):
        if order not in ("fifo", "lifo"):
            raise ValueError(f"unknown worklist order {order!r}")
        self.ex = ex
        self.arena: Arena = ex.arena
        self.summary_edges: set[tuple[int, int]] = set()
        self.summary_adj: dict[int, list[int]] = {}
        self._run(order)

    def _run(self, order: str) -> None:
        ex, arena = self.ex, self.arena
        nf = ex.nfacts
        funcs = arena.functions
        nx = [f.count * nf for f in funcs]
        base = [f.first * nf for f in funcs]
        partial = [bytearray(nf * n) for n in nx]
        processed = [bytearray(nf * n) for n in nx]
        self.partial = partial
        self.processed = processed
        succ_intra = ex.succ
        summary_adj = self.summary_adj
        summary_edges = self.summary_edges
        callers = arena.callers
        fg = [v.func for v in arena.vertices]
        exit_of = [f.exit for f in funcs]

        queue: deque[tuple[int, int]] = deque()
        for f in funcs:
            s = f.start * nf
            for d in range(nf):
                partial[f.index][d * nx[f.index] + (s + d - base[f.index])] = 1
                queue.append((d, s + d))
        pop = queue.popleft if order == "fifo" else queue.pop
        push = queue.append
        INTRA, CALL_RETURN = EdgeClass.INTRA, EdgeClass.CALL_RETURN

        while queue:
            d1, x = pop()
            u, d2 = divmod(x, nf)
            i = fg[u]
            if u != exit_of[i]:
                row = d1 * nx[i] - base[i]
                L, Pr = partial[i], processed[i]
                for y in (*succ_intra(x, INTRA), *succ_intra(x, CALL_RETURN), *summary_adj.get(x, ())):
                    k = row + y
                    if not Pr[k]:
                        L[k] = 1
                        Pr[k] = 1
                        push((d1, y))
                continue
            for cs in callers[i]:
                j = cs.caller
                L, Pr = partial[j], processed[j]
                cbase = cs.call * nf
                rbase = cs.retsite * nf
                for d3 in cs.call_rel.preimages[d1]:
                    xc = cbase + d3
                    for d4 in cs.ret_rel.images[d2]:
                        xr = rbase + d4
                        if (xc, xr) in summary_edges:
                            continue
                        summary_edges.add((xc, xr))
                        summary_adj.setdefault(xc, []).append(xr)
                        lc = xc - base[j]
                        lr = xr - base[j]
                        for d5 in range(nf):
                            if L[d5 * nx[j] + lc] and not Pr[d5 * nx[j] + lr]:
                                L[d5 * nx[j] + lr] = 1
                                Pr[d5 * nx[j] + lr] = 1
                                push((d5, xr))

    def is_partial(self, d1: int, gid: int, d2: int) -> bool:
        f = self.arena.functions[self.arena.vertices[gid].func]
        nf = self.ex.nfacts
        return bool(self.partial[f.index][d1 * f.count * nf + (gid - f.first) * nf + d2])

    def chi(self, func: int) -> set[tuple[int, int]]:
        """Summary relation of a function as (entry fact, exit fact) pairs."""
        f = self.arena.functions[func]
        nf = self.ex.nfacts
        n = f.count * nf
        le = (f.exit - f.first) * nf
        L = self.partial[func]
        return {(d1, d2) for d1 in range(nf) for d2 in range(nf) if L[d1 * n + le + d2]}

    def summary_succ(self, x: int) -> list[int]:
        return self.summary_adj.get(x, [])

    def same_context_succ(self, x: int) -> list[int]:
        ex = self.ex
        return [
            *ex.succ(x, EdgeClass.INTRA),
            *ex.succ(x, EdgeClass.CALL_RETURN),
            *self.summary_adj.get(x, ()),
        ]

    def function_view(self, func: int) -> list[list[int]]:
        """Same-context view of one function over local exploded indices."""
        f = self.arena.functions[func]
        nf = self.ex.nfacts
        base = f.first * nf
        return [
            [y - base for y in self.same_context_succ(base + lx)]
            for lx in range(f.count * nf)
        ]


def compute_summaries(ex: ExplodedSupergraph, order: str = "fifo") -> SummaryGraph:
    return SummaryGraph(ex, order)


class ViewTag(enum.Enum):
    SCVP = "scvp"
    IVP = "ivp"


@dataclass(frozen=True)
class ReachView:
    graph: SummaryGraph
    tag: ViewTag

    def succ(self, x: int) -> list[int]:
        out = self.graph.same_context_succ(x)
        if self.tag is ViewTag.IVP:
            out.extend(self.graph.ex.succ(x, EdgeClass.CALL_START))
        return out

    def reachable_from(self, src: int) -> set[int]:
        seen = {src}
        stack = [src]
        succ = self.succ
        while stack:
            x = stack.pop()
            for y in succ(x):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen


def view(sg: SummaryGraph, tag: ViewTag | str) -> ReachView:
    return ReachView(sg, ViewTag(tag) if isinstance(tag, str) else tag)


def reach_view(v: ReachView, src: int, dst: int) -> bool:
    """Plain graph search on a view between exploded vertex ids."""
    if src == dst:
        return True
    seen = {src}
    stack = [src]
    succ = v.succ
    while stack:
        x = stack.pop()
        for y in succ(x):
            if y == dst:
                return True
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return False
