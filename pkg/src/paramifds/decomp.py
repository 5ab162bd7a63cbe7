"""Tree decompositions of CFGs, balancing, partial order trees and LCA.

Graphs are plain undirected adjacency maps ``{vertex: set(neighbours)}`` over
integer vertices ``0..n-1``.
"""

from __future__ import annotations

import heapq
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

from .errors import DifferentTrees, UnknownVertex

Graph = Mapping[int, Iterable[int]]


@dataclass(frozen=True)
class Verdict:
    ok: bool
    prop: str | None = None
    witness: object = None

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "ok" if self.ok else f"violated {self.prop}: {self.witness!r}"


OK = Verdict(True)


@dataclass(frozen=True)
class TreeDecomposition:
    """Rooted tree of bags; ``parent[root] == -1``."""

    bags: tuple[frozenset[int], ...]
    parent: tuple[int, ...]

    @cached_property
    def root(self) -> int:
        roots = [b for b, p in enumerate(self.parent) if p < 0]
        return roots[0] if roots else -1

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.bags]
        for b, p in enumerate(self.parent):
            if p >= 0:
                out[p].append(b)
        return tuple(tuple(c) for c in out)

    @cached_property
    def depth(self) -> tuple[int, ...]:
        """Depth of each bag, the root having depth 1."""
        dep = [0] * len(self.bags)
        for b in self.preorder:
            p = self.parent[b]
            dep[b] = 1 if p < 0 else dep[p] + 1
        return tuple(dep)

    @cached_property
    def preorder(self) -> tuple[int, ...]:
        order: list[int] = []
        stack = [b for b, p in enumerate(self.parent) if p < 0][::-1]
        while stack:
            b = stack.pop()
            order.append(b)
            stack.extend(reversed(self.children[b]))
        return tuple(order)

    @property
    def height(self) -> int:
        return max(self.depth, default=0)

    def is_binary(self) -> bool:
        return all(len(c) <= 2 for c in self.children)


BalancedDecomposition = TreeDecomposition


def _copy_graph(g: Graph) -> dict[int, set[int]]:
    adj = {int(v): set() for v in g}
    for v, ns in g.items():
        for u in ns:
            if u != v:
                adj[v].add(u)
                adj.setdefault(u, set()).add(v)
    return adj


def _fill(adj: dict[int, set[int]], v: int) -> int:
    ns = adj[v]
    missing = 0
    for a, b in combinations(ns, 2):
        if b not in adj[a]:
            missing += 1
    return missing


def elimination_order(g: Graph, heuristic: str = "fill") -> list[tuple[int, frozenset[int]]]:
    """Min-fill (or min-degree) elimination, ties broken by degree then vertex id.

    Returns ``(vertex, neighbours at elimination time)`` in elimination order.
    """
    adj = _copy_graph(g)
    if heuristic == "fill":
        score = _fill
    elif heuristic == "degree":
        score = lambda adj, v: 0  # noqa: E731
    else:
        raise ValueError(f"unknown elimination heuristic {heuristic!r}")
    key = {v: (score(adj, v), len(adj[v]), v) for v in adj}
    heap = list(key.values())
    heapq.heapify(heap)
    out: list[tuple[int, frozenset[int]]] = []
    while heap:
        k = heapq.heappop(heap)
        v = k[2]
        if key.get(v) != k:
            continue
        del key[v]
        ns = adj.pop(v)
        out.append((v, frozenset(ns)))
        for u in ns:
            adj[u].discard(v)
        for a, b in combinations(ns, 2):
            adj[a].add(b)
            adj[b].add(a)
        touched = set(ns)
        for u in ns:
            touched.update(adj[u])
        for u in touched:
            nk = (score(adj, u), len(adj[u]), u)
            if key[u] != nk:
                key[u] = nk
                heapq.heappush(heap, nk)
    return out


def decompose_cfg(g: Graph, heuristic: str = "fill") -> TreeDecomposition:
    """Tree decomposition from a min-fill elimination ordering.

    Disconnected graphs get their component trees hung under one root, which
    is still a valid decomposition since the components share no vertices.
    """
    order = elimination_order(g, heuristic)
    if not order:
        return TreeDecomposition((frozenset(),), (-1,))
    pos = {v: i for i, (v, _) in enumerate(order)}
    bags = [frozenset(ns | {v}) for v, ns in order]
    parent = [-1] * len(order)
    for i, (_, ns) in enumerate(order):
        if ns:
            parent[i] = min(pos[u] for u in ns)
    roots = [i for i, p in enumerate(parent) if p < 0]
    for r in roots[:-1]:
        parent[r] = roots[-1]
    return _contract(bags, parent)


def _contract(bags: list[frozenset[int]], parent: list[int]) -> TreeDecomposition:
    """Merge every bag contained in its parent into that parent."""
    n = len(bags)
    alive = [True] * n
    rep = list(range(n))

    def find(b: int) -> int:
        while rep[b] != b:
            rep[b] = rep[rep[b]]
            b = rep[b]
        return b

    # parents always come later in an elimination tree, so one forward sweep suffices
    for b in range(n):
        p = parent[b]
        if p >= 0 and bags[b] <= bags[find(p)]:
            alive[b] = False
            rep[b] = find(p)
    keep = [b for b in range(n) if alive[b]]
    # a surviving child may have lost its parent; re-point to the representative
    newid = {b: i for i, b in enumerate(keep)}
    out_parent = []
    for b in keep:
        p = parent[b]
        out_parent.append(-1 if p < 0 else newid[find(p)])
    return TreeDecomposition(tuple(bags[b] for b in keep), tuple(out_parent))


def verify_decomposition(g: Graph, t: TreeDecomposition) -> Verdict:
    nb = len(t.bags)
    if len(t.parent) != nb:
        return Verdict(False, "tree", "parent map length differs from bag count")
    roots = [b for b, p in enumerate(t.parent) if p < 0]
    if len(roots) != 1:
        return Verdict(False, "tree", f"{len(roots)} roots")
    if len(t.preorder) != nb:
        return Verdict(False, "tree", "parent map contains a cycle")
    where: dict[int, list[int]] = {}
    for b, bag in enumerate(t.bags):
        for v in bag:
            where.setdefault(v, []).append(b)
    for v in sorted(g):
        if v not in where:
            return Verdict(False, "vertex", v)
    for v in sorted(g):
        for u in sorted(g[v]):
            if u == v:
                continue
            if not any(u in t.bags[b] for b in where[v]):
                return Verdict(False, "edge", (min(u, v), max(u, v)))
    for v in sorted(where):
        bs = set(where[v])
        # the bags of v are connected iff exactly one of them has its parent outside the set
        tops = [b for b in bs if t.parent[b] not in bs]
        if len(tops) != 1:
            return Verdict(False, "connected", v)
    return OK


# ---------------------------------------------------------------------------
# Balancing


def balance(t: TreeDecomposition) -> BalancedDecomposition:
    """Binary decomposition of logarithmic height and width at most 3(w+1)-1."""
    n = len(t.bags)
    if n == 1:
        return t
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for b, p in enumerate(t.parent):
        if p >= 0:
            nbrs[b].append(p)
            nbrs[p].append(b)
    bags = t.bags
    out_bags: list[frozenset[int]] = []
    out_parent: list[int] = []

    def new_node(bag: frozenset[int], par: int) -> int:
        out_bags.append(bag)
        out_parent.append(par)
        return len(out_bags) - 1

    def components(comp: set[int], cut: int) -> list[set[int]]:
        seen = {cut}
        out = []
        for s in nbrs[cut]:
            if s not in comp or s in seen:
                continue
            part = {s}
            seen.add(s)
            stack = [s]
            while stack:
                x = stack.pop()
                for y in nbrs[x]:
                    if y in comp and y not in seen:
                        seen.add(y)
                        part.add(y)
                        stack.append(y)
            out.append(part)
        return out

    def centroid(comp: set[int]) -> int:
        start = min(comp)
        order = [start]
        par = {start: -1}
        for x in order:
            for y in nbrs[x]:
                if y in comp and y not in par:
                    par[y] = x
                    order.append(y)
        size = dict.fromkeys(comp, 1)
        for x in reversed(order[1:]):
            size[par[x]] += size[x]
        total = len(comp)
        x = start
        while True:
            heavy = next(
                (y for y in nbrs[x] if y in comp and par.get(y) == x and size[y] * 2 > total),
                None,
            )
            if heavy is None:
                return x
            x = heavy

    def median_on_path(comp: set[int], p: int, q: int) -> int:
        par = {p: -1}
        order = [p]
        for x in order:
            if x == q:
                break
            for y in nbrs[x]:
                if y in comp and y not in par:
                    par[y] = x
                    order.append(y)
        path = [q]
        while path[-1] != p:
            path.append(par[path[-1]])
        path.reverse()
        on_path = set(path)
        weights = []
        for x in path:
            w = 1
            stack = [y for y in nbrs[x] if y in comp and y not in on_path]
            seen = set(stack)
            while stack:
                y = stack.pop()
                w += 1
                for z in nbrs[y]:
                    if z in comp and z not in on_path and z not in seen:
                        seen.add(z)
                        stack.append(z)
            weights.append(w)
        total = sum(weights)
        acc = 0
        for x, w in zip(path, weights):
            acc += w
            if acc * 2 >= total:
                return x
        return path[-1]

    # work items: (component, boundary [(inside bag, separator)], parent node, link)
    work: list[tuple[set[int], list[tuple[int, frozenset[int]]], int]] = [(set(range(n)), [], -1)]
    while work:
        comp, boundary, par = work.pop()
        if len(boundary) >= 2:
            c = median_on_path(comp, boundary[0][0], boundary[1][0])
        else:
            c = centroid(comp)
        wset = frozenset().union(*(s for _, s in boundary)) if boundary else frozenset()
        bag = bags[c] | wset
        node = new_node(bag, par)
        parts = components(comp, c)
        if not parts:
            continue
        items = []
        for part in parts:
            link = next(y for y in nbrs[c] if y in part)
            sub_boundary = [(link, bags[link] & bags[c])]
            sub_boundary += [(x, s) for x, s in boundary if x in part]
            items.append((part, sub_boundary))
        for slot, (part, sub_boundary) in zip(_attach_points(node, bag, [len(p) for p, _ in items], new_node), items):
            work.append((part, sub_boundary, slot))
    return TreeDecomposition(tuple(out_bags), tuple(out_parent))


def _attach_points(node: int, bag: frozenset[int], sizes: list[int], new_node) -> list[int]:
    """Parent node for each child subtree, inserting copies of ``bag`` as needed.

    Children with more weight sit closer to ``node``: child j lands at depth
    max(1, ceil(log2(S / s_j))), which keeps the overall height logarithmic.
    """
    k = len(sizes)
    if k <= 2:
        return [node] * k
    total = sum(sizes)
    lengths = []
    for s in sizes:
        d = 1
        while s * (1 << d) < total:
            d += 1
        lengths.append(d)
    # canonical prefix code for the chosen lengths (Kraft sum is at most 1)
    order = sorted(range(k), key=lambda j: (lengths[j], j))
    codes: dict[int, str] = {}
    code = 0
    prev = lengths[order[0]]
    for j in order:
        code <<= lengths[j] - prev
        prev = lengths[j]
        codes[j] = format(code, f"0{lengths[j]}b")
        code += 1
    trie = {"": node}
    out = []
    for j in range(k):
        bits = codes[j]
        for i in range(1, len(bits)):
            pre = bits[:i]
            if pre not in trie:
                trie[pre] = new_node(bag, trie[bits[: i - 1]])
        out.append(trie[bits[:-1]])
    return out


# ---------------------------------------------------------------------------
# Partial order trees


@dataclass(frozen=True)
class POT:
    """Rooted forest over ``0..n-1``; ``parent[v] == -1`` marks a root."""

    parent: tuple[int, ...]

    @cached_property
    def depths(self) -> tuple[int, ...]:
        n = len(self.parent)
        dep = [0] * n
        for v in range(n):
            chain = []
            x = v
            while x >= 0 and dep[x] == 0:
                chain.append(x)
                x = self.parent[x]
                if len(chain) > n:
                    raise ValueError("parent map contains a cycle")
            base = 0 if x < 0 else dep[x]
            for y in reversed(chain):
                base += 1
                dep[y] = base
        return tuple(dep)

    @property
    def depth(self) -> int:
        return max(self.depths, default=0)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p >= 0:
                out[p].append(v)
        return tuple(tuple(c) for c in out)

    @cached_property
    def roots(self) -> tuple[int, ...]:
        return tuple(v for v, p in enumerate(self.parent) if p < 0)

    def ancestors(self, v: int) -> list[int]:
        """v and its ancestors, bottom-up."""
        out = []
        while v >= 0:
            out.append(v)
            v = self.parent[v]
        return out

    def is_ancestor(self, a: int, v: int) -> bool:
        da = self.depths[a]
        while self.depths[v] > da:
            v = self.parent[v]
        return v == a


def _components(adj: Mapping[int, Iterable[int]], verts: Iterable[int]) -> list[list[int]]:
    verts = set(verts)
    seen: set[int] = set()
    out = []
    for s in sorted(verts):
        if s in seen:
            continue
        seen.add(s)
        comp = [s]
        for x in comp:
            for y in adj[x]:
                if y in verts and y not in seen:
                    seen.add(y)
                    comp.append(y)
        out.append(comp)
    return out


def _pot_greedy(adj: dict[int, set[int]], n: int) -> POT:
    """Root each component at its highest-degree vertex, then recurse."""
    parent = [-1] * n
    work = [(c, -1) for c in _components(adj, range(n))]
    while work:
        comp, par = work.pop()
        cs = set(comp)
        root = max(comp, key=lambda v: (sum(1 for u in adj[v] if u in cs), -v))
        parent[root] = par
        cs.discard(root)
        work.extend((c, root) for c in _components(adj, cs))
    return POT(tuple(parent))


def _pot_dissection(adj: dict[int, set[int]], n: int) -> POT:
    """Nested dissection along centroid bags of a tree decomposition."""
    # min-fill is quadratic in the degree; call graphs can have hub functions
    hubs = max((len(ns) for ns in adj.values()), default=0) > 32
    td = decompose_cfg(adj, "degree" if hubs else "fill") if n else None
    parent = [-1] * n
    if td is None:
        return POT(())
    bags_of: list[list[int]] = [[] for _ in range(n)]
    for b, bag in enumerate(td.bags):
        for v in bag:
            bags_of[v].append(b)
    depth = td.depth

    work = [(c, -1) for c in _components(adj, range(n))]
    while work:
        comp, par = work.pop()
        cset = set(comp)
        relevant = sorted({b for v in comp for b in bags_of[v]}, key=lambda b: -depth[b])
        rel = set(relevant)
        count = dict.fromkeys(relevant, 0)
        for v in comp:
            top = min(bags_of[v], key=lambda b: depth[b])
            count[top] += 1
        sub = dict(count)
        kids: dict[int, list[int]] = {b: [] for b in relevant}
        for b in relevant:  # deepest first
            p = td.parent[b]
            if p in rel:
                sub[p] += sub[b]
                kids[p].append(b)
        b = relevant[-1]
        half = len(comp) / 2
        while True:
            nxt = next((c for c in kids[b] if sub[c] >= half), None)
            if nxt is None:
                break
            b = nxt
        # Often a few bag vertices already split the component evenly.
        cand = sorted(td.bags[b] & cset)
        last = par
        rest = cset
        pieces = [comp]
        while cand and max(map(len, pieces)) > half:
            best = None
            for v in cand:
                trial = _components(adj, rest - {v})
                key = (max(map(len, trial), default=0), v)
                if best is None or key < best[0]:
                    best = (key, v, trial)
            _, v, pieces = best
            cand.remove(v)
            rest = rest - {v}
            parent[v] = last
            last = v
        work.extend((c, last) for c in pieces)
    return POT(tuple(parent))


def compute_pot(c: Graph) -> POT:
    """Shallow POT: the better of nested dissection and a max-degree greedy."""
    adj = _copy_graph(c)
    n = len(adj)
    if set(adj) != set(range(n)):
        raise ValueError("graph vertices must be 0..n-1")
    best = None
    for build in (_pot_dissection, _pot_greedy):
        p = build(adj, n)
        if best is None or p.depth < best.depth:
            best = p
    return best


def verify_pot(c: Graph, p: POT) -> Verdict:
    n = len(p.parent)
    for v in c:
        if not 0 <= v < n:
            return Verdict(False, "vertex", v)
    try:
        p.depths
    except ValueError:
        return Verdict(False, "tree", "parent map contains a cycle")
    for v in sorted(c):
        for u in sorted(c[v]):
            if u == v:
                continue
            a, b = (u, v) if p.depths[u] <= p.depths[v] else (v, u)
            if not p.is_ancestor(a, b):
                return Verdict(False, "comparable", (min(u, v), max(u, v)))
    return OK


def exact_treedepth(c: Graph) -> int:
    """Treedepth by exhaustive search over vertex subsets; meant for tiny graphs."""
    adj = _copy_graph(c)
    verts = sorted(adj)
    if len(verts) > 16:
        raise ValueError("exact treedepth is limited to 16 vertices")
    bit = {v: 1 << i for i, v in enumerate(verts)}
    nmask = [sum(bit[u] for u in adj[v]) for v in verts]
    memo: dict[int, int] = {0: 0}

    def comps(mask: int) -> list[int]:
        out = []
        while mask:
            seed = mask & -mask
            comp = seed
            frontier = seed
            while frontier:
                low = frontier & -frontier
                frontier ^= low
                i = low.bit_length() - 1
                new = nmask[i] & mask & ~comp
                comp |= new
                frontier |= new
            out.append(comp)
            mask &= ~comp
        return out

    def td(mask: int) -> int:
        if mask in memo:
            return memo[mask]
        parts = comps(mask)
        if len(parts) > 1:
            res = max(td(p) for p in parts)
        else:
            res = len(verts) + 1
            m = mask
            while m:
                low = m & -m
                m ^= low
                res = min(res, 1 + td(mask ^ low))
        memo[mask] = res
        return res

    return td((1 << len(verts)) - 1)


# ---------------------------------------------------------------------------
# LCA


class LcaIndex:
    """Euler tour with a sparse min-table; forests get a virtual root."""

    def __init__(self, parent: Iterable[int]):
        parent = list(parent)
        n = self.n = len(parent)
        virt = n
        kids: list[list[int]] = [[] for _ in range(n + 1)]
        for v, p in enumerate(parent):
            kids[virt if p < 0 else p].append(v)
        depth = [0] * (n + 1)
        first = [0] * (n + 1)
        euler: list[int] = []
        stack = [(virt, 0)]
        while stack:
            v, i = stack.pop()
            if i == 0:
                first[v] = len(euler)
            euler.append(v)
            if i < len(kids[v]):
                stack.append((v, i + 1))
                c = kids[v][i]
                depth[c] = depth[v] + 1
                stack.append((c, 0))
        self._virtual = virt
        self._first = first
        self._euler = euler
        self._depth = depth
        table = [euler]
        k = 1
        while (1 << k) <= len(euler):
            prev = table[-1]
            half = 1 << (k - 1)
            row = [
                a if depth[a] <= depth[b] else b
                for a, b in zip(prev, prev[half:])
            ]
            table.append(row)
            k += 1
        self._table = table

    def lca(self, u: int, v: int) -> int:
        for x in (u, v):
            if not 0 <= x < self.n:
                raise UnknownVertex(f"unknown vertex {x!r}")
        i, j = self._first[u], self._first[v]
        if i > j:
            i, j = j, i
        k = (j - i + 1).bit_length() - 1
        row = self._table[k]
        a, b = row[i], row[j - (1 << k) + 1]
        res = a if self._depth[a] <= self._depth[b] else b
        if res == self._virtual:
            raise DifferentTrees(f"{u} and {v} lie in different trees")
        return res


def lca(idx: LcaIndex, u: int, v: int) -> int:
    return idx.lca(u, v)
