"""Reference solvers: an explicit-stack Dyck oracle and two tabulation baselines.

None of these use the summary graph or the decompositions, so they make
independent oracles for the parameterized engine.
"""

from __future__ import annotations

import enum
from collections import deque

from .arena import EdgeClass, ExplodedSupergraph, VertexKind
from .errors import BoundExceeded

DEFAULT_CONFIG_BUDGET = 2_000_000


class Mode(enum.Enum):
    IVP = "ivp"
    SCVP = "scvp"


def default_stack_bound(ex: ExplodedSupergraph) -> int:
    nf = ex.nfacts
    return len(ex.arena.functions) * nf * (nf + 1)


class DyckOracle:
    """Breadth-first search over (exploded vertex, call stack) configurations.

    A stack entry is ``(return-site vertex, exploded callee entry)``.  Pushes
    that would put more than ``|D*| + 1`` entries with the same callee entry on
    the stack are pruned: a shortest valid path never does that (two open
    levels entering and leaving a function at the same facts can be collapsed,
    and so can two never-returned calls entering at the same fact).  This also
    caps the stack height at ``|F| * |D*| * (|D*| + 1)``, so the search space is
    finite and the answer exact.  The configuration budget guards the time
    spent; running out raises :class:`BoundExceeded` instead of guessing.
    """

    def __init__(self, ex: ExplodedSupergraph, stack_bound: int | None = None, budget: int = DEFAULT_CONFIG_BUDGET):
        self.ex = ex
        self.stack_bound = default_stack_bound(ex) if stack_bound is None else stack_bound
        self.budget = budget
        arena = ex.arena
        self._kind = [v.kind for v in arena.vertices]
        self._partner = [v.partner for v in arena.vertices]
        self.per_entry_cap = ex.nfacts + 1

    def _search(self, src: int, dst: int | None, scvp_only: bool):
        """Yield ``(exploded vertex, stack is empty)`` for every new pair reached."""
        ex = self.ex
        nf = ex.nfacts
        kind, partner = self._kind, self._partner
        start = (src, ())
        seen = {start}
        queue = deque([start])
        emitted: set[tuple[int, bool]] = set()
        cap = self.per_entry_cap
        bound = self.stack_bound
        budget = self.budget
        CALL, EXIT = VertexKind.CALL, VertexKind.EXIT
        while queue:
            x, stack = queue.popleft()
            key = (x, not stack)
            if key not in emitted:
                emitted.add(key)
                yield key
                if x == dst and (not stack or not scvp_only):
                    return
            u = x // nf
            k = kind[u]
            if k is EXIT:
                if not stack:
                    continue
                r = stack[-1][0]
                rest = stack[:-1]
                nxt = [(y, rest) for y in ex.succ(x, EdgeClass.EXIT_RETURN) if y // nf == r]
            elif k is CALL:
                nxt = [(y, stack) for y in ex.succ(x, EdgeClass.CALL_RETURN)]
                if len(stack) < bound:
                    r = partner[u]
                    for y in ex.succ(x, EdgeClass.CALL_START):
                        if sum(1 for e in stack if e[1] == y) < cap:
                            nxt.append((y, stack + ((r, y),)))
            else:
                nxt = [(y, stack) for y in ex.succ(x, EdgeClass.INTRA)]
            for cfg in nxt:
                if cfg not in seen:
                    if len(seen) >= budget:
                        raise BoundExceeded(
                            f"more than {budget} configurations explored from exploded vertex {src}"
                        )
                    seen.add(cfg)
                    queue.append(cfg)

    def reachable_both(self, src: int) -> tuple[set[int], set[int]]:
        """Targets of valid paths and of same-context valid paths from ``src``."""
        ivp: set[int] = set()
        scvp: set[int] = set()
        for x, empty in self._search(src, None, False):
            ivp.add(x)
            if empty:
                scvp.add(x)
        return ivp, scvp

    def reach(self, src: int, dst: int, mode: Mode | str = Mode.IVP) -> bool:
        scvp = Mode(mode) is Mode.SCVP
        if src == dst:
            return True
        return any(x == dst and (empty or not scvp) for x, empty in self._search(src, dst, scvp))

    def reachable(self, src: int, mode: Mode | str = Mode.IVP) -> set[int]:
        ivp, scvp = self.reachable_both(src)
        return scvp if Mode(mode) is Mode.SCVP else ivp


def dyck_reach(ex: ExplodedSupergraph, src: int, dst: int, mode: Mode | str = Mode.IVP, stack_bound: int | None = None) -> bool:
    return DyckOracle(ex, stack_bound).reach(src, dst, mode)


class Tabulator:
    """Classic tabulation over path edges keyed by calling context.

    A context is either an exploded start vertex ``(s_p, d)`` (entered through
    a call) or a negative pseudo-context for a seed, which can never return to
    a caller.  Summaries found in any context are shared by all of them.
    """

    def __init__(self, ex: ExplodedSupergraph):
        self.ex = ex
        nf = self.nf = ex.nfacts
        self._kind = [v.kind for v in ex.arena.vertices]
        self._partner = [v.partner for v in ex.arena.vertices]
        self.path: dict[int, set[int]] = {}
        self.incoming: dict[int, set[int]] = {}
        self.end_summary: dict[int, set[int]] = {}
        self.summary: dict[int, set[int]] = {}
        self.reached_by: dict[int, set[int]] = {}
        self.explored = 0
        self._work: deque[tuple[int, int]] = deque()
        self._nf = nf

    def _prop(self, ctx: int, x: int) -> None:
        ps = self.path.setdefault(ctx, set())
        if x not in ps:
            ps.add(x)
            self._work.append((ctx, x))

    def _return(self, c: int, e: int) -> None:
        nf = self.nf
        r = self._partner[c // nf]
        targets = self.summary.setdefault(c, set())
        for y in self.ex.succ(e, EdgeClass.EXIT_RETURN):
            if y // nf != r or y in targets:
                continue
            targets.add(y)
            for ctx in tuple(self.reached_by.get(c, ())):
                self._prop(ctx, y)

    def seed(self, ctx: int, x: int) -> None:
        self._prop(ctx, x)

    def run(self) -> None:
        ex, nf = self.ex, self.nf
        kind = self._kind
        while self._work:
            ctx, x = self._work.popleft()
            self.explored += 1
            k = kind[x // nf]
            if k is VertexKind.CALL:
                self.reached_by.setdefault(x, set()).add(ctx)
                for y in ex.succ(x, EdgeClass.CALL_RETURN):
                    self._prop(ctx, y)
                for y in tuple(self.summary.get(x, ())):
                    self._prop(ctx, y)
                for s in ex.succ(x, EdgeClass.CALL_START):
                    self.incoming.setdefault(s, set()).add(x)
                    if s not in self.path:
                        self._prop(s, s)
                    else:
                        for e in tuple(self.end_summary.get(s, ())):
                            self._return(x, e)
            elif k is VertexKind.EXIT:
                if ctx >= 0:
                    ends = self.end_summary.setdefault(ctx, set())
                    if x not in ends:
                        ends.add(x)
                        for c in tuple(self.incoming.get(ctx, ())):
                            self._return(c, x)
            else:
                for y in ex.succ(x, EdgeClass.INTRA):
                    self._prop(ctx, y)

    def closure(self, ctx: int) -> set[int]:
        """Everything reachable from a context, following calls into callees."""
        nf = self.nf
        out: set[int] = set()
        seen = {ctx}
        stack = [ctx]
        while stack:
            c = stack.pop()
            ps = self.path.get(c, ())
            out.update(ps)
            for x in ps:
                if self._kind[x // nf] is VertexKind.CALL:
                    for s in self.ex.succ(x, EdgeClass.CALL_START):
                        if s not in seen:
                            seen.add(s)
                            stack.append(s)
        return out


def exhaustive_tabulate(ex: ExplodedSupergraph, start) -> set[int]:
    """Exploded vertices reachable along valid paths from any start vertex."""
    tab = Tabulator(ex)
    for x in start:
        tab.seed(-1, x)
    tab.run()
    return set().union(*tab.path.values()) if tab.path else set()


class DemandSolver:
    """On-demand tabulation with persistent summaries and per-source memo."""

    def __init__(self, ex: ExplodedSupergraph):
        self.ex = ex
        self.tab = Tabulator(ex)
        self.memo: dict[int, frozenset[int]] = {}

    @property
    def explored(self) -> int:
        return self.tab.explored

    def reachable(self, src: int) -> frozenset[int]:
        hit = self.memo.get(src)
        if hit is not None:
            return hit
        ctx = -1 - src
        self.tab.seed(ctx, src)
        self.tab.run()
        res = frozenset(self.tab.closure(ctx))
        self.memo[src] = res
        return res

    def query(self, u1: int, d1: int, u2: int, d2: int) -> bool:
        nf = self.ex.nfacts
        return u2 * nf + d2 in self.reachable(u1 * nf + d1)


def demand_tabulate(state: DemandSolver, u1: int, d1: int, u2: int, d2: int) -> bool:
    return state.query(u1, d1, u2, d2)
