"""IFDS arena model: fact domain, flow relations, supergraph, exploded supergraph.

An arena is read from a JSON document::

    {"facts": ["a", ...], "bandwidth": 4,
     "functions": [{"name": "main",
                    "vertices": [{"id": "s_m", "kind": "start"},
                                 {"id": "c1", "kind": "call", "callee": "g", "retsite": "r1"}, ...],
                    "edges": [{"from": "s_m", "to": "c1", "rel": [[0, 0], [1, 1]]}, ...],
                    "calls": [{"call": "c1", "call_rel": [[0, 0]], "ret_rel": [[0, 0]]}]}]}

Fact index 0 is the zero fact; ``facts[k]`` has index ``k + 1``.  Vertex ids
are names that must be unique across the whole arena.  Internally vertices get
dense integer ids, function by function in document order, and the exploded
vertex ``(v, d)`` has id ``v * |D*| + d``.
"""

from __future__ import annotations

import enum
import hashlib
import json
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

from .errors import DomainMismatch, ParseError, ValidationError

DEFAULT_BANDWIDTH = 4


class VertexKind(enum.Enum):
    START = "start"
    EXIT = "exit"
    CALL = "call"
    RETSITE = "retsite"
    PLAIN = "plain"


class EdgeClass(enum.IntEnum):
    INTRA = 0
    CALL_RETURN = 1
    CALL_START = 2
    EXIT_RETURN = 3


@dataclass(frozen=True)
class FactDomain:
    facts: tuple[str, ...]

    @property
    def size(self) -> int:
        """|D*|, i.e. the facts plus the zero fact."""
        return len(self.facts) + 1

    def index(self, name: str | int) -> int:
        if isinstance(name, int):
            if not 0 <= name < self.size:
                raise KeyError(name)
            return name
        if name == "0":
            return 0
        try:
            return self.facts.index(name) + 1
        except ValueError:
            if name.isdigit() and int(name) < self.size:
                return int(name)
            raise KeyError(name) from None

    def name(self, index: int) -> str:
        return "0" if index == 0 else self.facts[index - 1]


@dataclass(frozen=True)
class FlowRelation:
    """Bipartite representation of a distributive flow function over D*."""

    size: int
    pairs: frozenset[tuple[int, int]]

    def __post_init__(self):
        for s, d in self.pairs:
            if not (0 <= s < self.size and 0 <= d < self.size):
                raise ValidationError(f"fact pair ({s}, {d}) out of range for |D*|={self.size}")
        if (0, 0) not in self.pairs:
            raise ValidationError("relation lacks the (0, 0) pair")

    @classmethod
    def of(cls, size: int, pairs: Iterable[Iterable[int]]) -> FlowRelation:
        return cls(size, frozenset((int(s), int(d)) for s, d in pairs))

    @classmethod
    def identity(cls, size: int) -> FlowRelation:
        return cls(size, frozenset((d, d) for d in range(size)))

    @cached_property
    def images(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.size)]
        for s, d in sorted(self.pairs):
            out[s].append(d)
        return tuple(tuple(x) for x in out)

    @cached_property
    def preimages(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.size)]
        for s, d in sorted(self.pairs):
            out[d].append(s)
        return tuple(tuple(x) for x in out)

    def max_degree(self) -> int:
        return max(max(len(x) for x in self.images), max(len(x) for x in self.preimages))

    def to_list(self) -> list[list[int]]:
        return [list(p) for p in sorted(self.pairs)]


def compose_relations(r1: FlowRelation, r2: FlowRelation) -> FlowRelation:
    """Relation of "apply r1, then r2"."""
    if r1.size != r2.size:
        raise DomainMismatch(f"cannot compose relations over |D*|={r1.size} and |D*|={r2.size}")
    pairs = {(s, d) for s, mid in r1.pairs for d in r2.images[mid]}
    return FlowRelation(r1.size, frozenset(pairs))


def apply_relation(r: FlowRelation, facts: Iterable[int]) -> set[int]:
    facts = set(facts)
    if 0 not in facts:
        raise ValueError("fact set must contain the zero fact")
    for d in facts:
        if not 0 <= d < r.size:
            raise IndexError(d)
    return {t for d in facts for t in r.images[d]}


@dataclass(frozen=True)
class Vertex:
    gid: int
    name: str
    func: int
    kind: VertexKind
    callee: int | None = None  # call vertices: callee function index
    partner: int | None = None  # call <-> retsite partner gid


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    rel: FlowRelation
    cls: EdgeClass


@dataclass(frozen=True)
class CallSite:
    call: int
    retsite: int
    caller: int
    callee: int
    call_rel: FlowRelation
    ret_rel: FlowRelation


@dataclass(frozen=True)
class Function:
    index: int
    name: str
    first: int
    count: int
    start: int
    exit: int
    calls: tuple[int, ...]

    @property
    def vertices(self) -> range:
        return range(self.first, self.first + self.count)


@dataclass(frozen=True)
class Arena:
    domain: FactDomain
    functions: tuple[Function, ...]
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    callsites: tuple[CallSite, ...]
    bandwidth: int = DEFAULT_BANDWIDTH
    fingerprint: str = field(default="", compare=False)

    @property
    def nfacts(self) -> int:
        return self.domain.size

    @cached_property
    def by_name(self) -> dict[str, int]:
        return {v.name: v.gid for v in self.vertices}

    @cached_property
    def func_by_name(self) -> dict[str, int]:
        return {f.name: f.index for f in self.functions}

    @cached_property
    def callsite_of(self) -> dict[int, CallSite]:
        return {cs.call: cs for cs in self.callsites}

    @cached_property
    def callers(self) -> tuple[tuple[CallSite, ...], ...]:
        """Call sites targeting each function."""
        out: list[list[CallSite]] = [[] for _ in self.functions]
        for cs in self.callsites:
            out[cs.callee].append(cs)
        return tuple(tuple(x) for x in out)

    @cached_property
    def out_edges(self) -> tuple[tuple[Edge, ...], ...]:
        out: list[list[Edge]] = [[] for _ in self.vertices]
        for e in self.edges:
            out[e.src].append(e)
        return tuple(tuple(x) for x in out)

    def fg(self, gid: int) -> int:
        return self.vertices[gid].func

    def vertex(self, name: str | int) -> int:
        if isinstance(name, int):
            if not 0 <= name < len(self.vertices):
                raise KeyError(name)
            return name
        return self.by_name[name]

    def cfg_undirected(self, func: int) -> dict[int, set[int]]:
        """Undirected CFG of one function over local vertex indices."""
        f = self.functions[func]
        adj: dict[int, set[int]] = {i: set() for i in range(f.count)}
        for gid in f.vertices:
            for e in self.out_edges[gid]:
                a, b = e.src - f.first, e.dst - f.first
                if a != b:
                    adj[a].add(b)
                    adj[b].add(a)
        return adj

    def to_document(self) -> dict[str, Any]:
        funcs = []
        for f in self.functions:
            verts = []
            for gid in f.vertices:
                v = self.vertices[gid]
                item: dict[str, Any] = {"id": v.name, "kind": v.kind.value}
                if v.kind is VertexKind.CALL:
                    item["callee"] = self.functions[v.callee].name
                    item["retsite"] = self.vertices[v.partner].name
                verts.append(item)
            edges = [
                {"from": self.vertices[e.src].name, "to": self.vertices[e.dst].name, "rel": e.rel.to_list()}
                for gid in f.vertices
                for e in self.out_edges[gid]
            ]
            calls = [
                {
                    "call": self.vertices[c].name,
                    "call_rel": self.callsite_of[c].call_rel.to_list(),
                    "ret_rel": self.callsite_of[c].ret_rel.to_list(),
                }
                for c in f.calls
            ]
            funcs.append({"name": f.name, "vertices": verts, "edges": edges, "calls": calls})
        return {"facts": list(self.domain.facts), "bandwidth": self.bandwidth, "functions": funcs}

    def dumps(self) -> str:
        return canonical_json(self.to_document())


def canonical_json(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def document_fingerprint(doc: dict[str, Any]) -> str:
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Loading and validation


def _need(obj: Any, key: str, typ: type | tuple[type, ...], where: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{where}: missing key {key!r}")
    val = obj[key]
    if not isinstance(val, typ) or isinstance(val, bool) and typ is not bool:
        raise ParseError(f"{where}.{key}: expected {getattr(typ, '__name__', typ)}")
    return val


def _pairs(raw: Any, where: str) -> list[tuple[int, int]]:
    if not isinstance(raw, list):
        raise ParseError(f"{where}: relation must be a list of [src, dst] pairs")
    out = []
    for k, p in enumerate(raw):
        if (
            not isinstance(p, list)
            or len(p) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in p)
        ):
            raise ParseError(f"{where}[{k}]: expected a pair of integers")
        out.append((p[0], p[1]))
    return out


def _relation(raw: Any, nf: int, where: str, fix_zero: bool) -> FlowRelation:
    pairs = set(_pairs(raw, where))
    for s, d in sorted(pairs):
        if not (0 <= s < nf and 0 <= d < nf):
            raise ValidationError(f"fact index out of range in pair ({s}, {d}); |D*|={nf}", where)
        if d == 0 and s != 0:
            raise ValidationError(f"pair ({s}, 0) maps a fact onto the zero fact", where)
    if (0, 0) not in pairs:
        if not fix_zero:
            raise ValidationError("relation lacks the (0, 0) pair", where)
        pairs.add((0, 0))
    return FlowRelation(nf, frozenset(pairs))


def load_arena(document: str | bytes | dict | Path, *, fix_zero: bool = False) -> Arena:
    """Parse and validate an arena document (JSON text, a parsed dict, or a path)."""
    if isinstance(document, Path):
        try:
            document = document.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(str(exc)) from exc
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ParseError("top level must be an object")

    facts = _need(document, "facts", list, "$")
    for k, name in enumerate(facts):
        if not isinstance(name, str):
            raise ParseError(f"$.facts[{k}]: fact names must be strings")
        if not name:
            raise ValidationError("empty fact name", f"$.facts[{k}]")
        if name == "0" or name.isdigit():
            raise ValidationError(f"fact name {name!r} collides with fact indices", f"$.facts[{k}]")
    if len(set(facts)) != len(facts):
        raise ValidationError("duplicate fact names", "$.facts")
    domain = FactDomain(tuple(facts))
    nf = domain.size

    bandwidth = document.get("bandwidth", DEFAULT_BANDWIDTH)
    if not isinstance(bandwidth, int) or isinstance(bandwidth, bool) or bandwidth < 1:
        raise ValidationError("bandwidth must be a positive integer", "$.bandwidth")

    raw_funcs = _need(document, "functions", list, "$")
    func_index: dict[str, int] = {}
    for k, rf in enumerate(raw_funcs):
        name = _need(rf, "name", str, f"$.functions[{k}]")
        if name in func_index:
            raise ValidationError(f"duplicate function name {name!r}", f"$.functions[{k}]")
        func_index[name] = k

    # first pass: vertices
    vertices: list[Vertex] = []
    by_name: dict[str, int] = {}
    pending_calls: list[tuple[int, str, str, str]] = []  # gid, callee, retsite, where
    spans: list[tuple[int, int]] = []
    for k, rf in enumerate(raw_funcs):
        where = f"$.functions[{k}]"
        raw_verts = _need(rf, "vertices", list, where)
        first = len(vertices)
        for j, rv in enumerate(raw_verts):
            vw = f"{where}.vertices[{j}]"
            vid = _need(rv, "id", (str, int), vw)
            vid = str(vid)
            kind_raw = _need(rv, "kind", str, vw)
            try:
                kind = VertexKind(kind_raw.lower())
            except ValueError:
                raise ValidationError(f"unknown vertex kind {kind_raw!r}", vw) from None
            if vid in by_name:
                raise ValidationError(f"duplicate vertex id {vid!r}", vw)
            gid = len(vertices)
            by_name[vid] = gid
            vertices.append(Vertex(gid, vid, k, kind))
            if kind is VertexKind.CALL:
                callee = rv.get("callee")
                ret = rv.get("retsite")
                if not isinstance(callee, str):
                    raise ValidationError("call vertex lacks a callee", vw)
                if not isinstance(ret, (str, int)) or isinstance(ret, bool):
                    raise ValidationError("call vertex lacks a retsite partner", vw)
                pending_calls.append((gid, callee, str(ret), vw))
        spans.append((first, len(vertices) - first))

    # call / retsite pairing
    partner: dict[int, int] = {}
    callee_of: dict[int, int] = {}
    for gid, callee, ret, vw in pending_calls:
        if callee not in func_index:
            raise ValidationError(f"dangling callee {callee!r}", vw)
        if ret not in by_name:
            raise ValidationError(f"unmatched call: retsite {ret!r} does not exist", vw)
        r = by_name[ret]
        if vertices[r].kind is not VertexKind.RETSITE:
            raise ValidationError(f"unmatched call: {ret!r} is not a retsite vertex", vw)
        if vertices[r].func != vertices[gid].func:
            raise ValidationError(f"unmatched call: retsite {ret!r} lies in another function", vw)
        if r in partner:
            raise ValidationError(f"retsite {ret!r} is shared by two call vertices", vw)
        partner[r] = gid
        partner[gid] = r
        callee_of[gid] = func_index[callee]
    for v in vertices:
        if v.kind is VertexKind.RETSITE and v.gid not in partner:
            raise ValidationError(f"unmatched retsite {v.name!r} has no call vertex", v.name)
    vertices = [
        Vertex(v.gid, v.name, v.func, v.kind, callee_of.get(v.gid), partner.get(v.gid)) for v in vertices
    ]

    functions: list[Function] = []
    edges: list[Edge] = []
    callsites: list[CallSite] = []
    for k, rf in enumerate(raw_funcs):
        where = f"$.functions[{k}]"
        first, count = spans[k]
        local = vertices[first : first + count]
        starts = [v.gid for v in local if v.kind is VertexKind.START]
        exits = [v.gid for v in local if v.kind is VertexKind.EXIT]
        if len(starts) != 1:
            what = "duplicate start vertex" if starts else "missing start vertex"
            raise ValidationError(what, where)
        if len(exits) != 1:
            what = "duplicate exit vertex" if exits else "missing exit vertex"
            raise ValidationError(what, where)

        seen: set[tuple[int, int]] = set()
        fedges: list[Edge] = []
        for j, re_ in enumerate(_need(rf, "edges", list, where)):
            ew = f"{where}.edges[{j}]"
            a = str(_need(re_, "from", (str, int), ew))
            b = str(_need(re_, "to", (str, int), ew))
            for x in (a, b):
                if x not in by_name:
                    raise ValidationError(f"unknown vertex {x!r}", ew)
            src, dst = by_name[a], by_name[b]
            if vertices[src].func != k or vertices[dst].func != k:
                raise ValidationError(f"edge {a}->{b} leaves function {rf['name']!r}", ew)
            if (src, dst) in seen:
                raise ValidationError(f"duplicate edge {a}->{b}", ew)
            seen.add((src, dst))
            rel = _relation(re_.get("rel"), nf, f"{ew}.rel ({a}->{b})", fix_zero)
            vs, vd = vertices[src], vertices[dst]
            if vs.kind is VertexKind.EXIT:
                raise ValidationError(f"exit vertex {a!r} has an intraprocedural out-edge", ew)
            if vs.kind is VertexKind.CALL:
                if dst != vs.partner:
                    raise ValidationError(f"call vertex {a!r} has an out-edge other than to its retsite", ew)
                cls = EdgeClass.CALL_RETURN
            else:
                cls = EdgeClass.INTRA
            if vd.kind is VertexKind.RETSITE and src != vd.partner:
                raise ValidationError(f"retsite {b!r} has an in-edge other than from its call", ew)
            fedges.append(Edge(src, dst, rel, cls))

        raw_calls = rf.get("calls", [])
        if not isinstance(raw_calls, list):
            raise ParseError(f"{where}.calls: expected a list")
        call_rels: dict[int, tuple[FlowRelation, FlowRelation]] = {}
        for j, rc in enumerate(raw_calls):
            cw = f"{where}.calls[{j}]"
            c = str(_need(rc, "call", (str, int), cw))
            if c not in by_name or vertices[by_name[c]].kind is not VertexKind.CALL:
                raise ValidationError(f"{c!r} is not a call vertex", cw)
            cg = by_name[c]
            if vertices[cg].func != k:
                raise ValidationError(f"call vertex {c!r} belongs to another function", cw)
            if cg in call_rels:
                raise ValidationError(f"duplicate call entry for {c!r}", cw)
            crel = _relation(rc.get("call_rel"), nf, f"{cw}.call_rel", fix_zero)
            rrel = _relation(rc.get("ret_rel"), nf, f"{cw}.ret_rel", fix_zero)
            for tag, rel in (("call_rel", crel), ("ret_rel", rrel)):
                if rel.max_degree() > bandwidth:
                    raise ValidationError(
                        f"bandwidth {bandwidth} exceeded (degree {rel.max_degree()})", f"{cw}.{tag}"
                    )
            call_rels[cg] = (crel, rrel)

        calls = tuple(v.gid for v in local if v.kind is VertexKind.CALL)
        for cg in calls:
            v = vertices[cg]
            if cg not in call_rels:
                raise ValidationError(f"call vertex {v.name!r} has no calls entry", where)
            if (cg, v.partner) not in seen:
                raise ValidationError(f"call vertex {v.name!r} lacks its call-return-site edge", where)
            crel, rrel = call_rels[cg]
            callsites.append(CallSite(cg, v.partner, k, v.callee, crel, rrel))
        functions.append(Function(k, rf["name"], first, count, starts[0], exits[0], calls))
        edges.extend(fedges)

    arena = Arena(
        domain,
        tuple(functions),
        tuple(vertices),
        tuple(edges),
        tuple(callsites),
        bandwidth,
    )
    object.__setattr__(arena, "fingerprint", document_fingerprint(arena.to_document()))
    return arena


# ---------------------------------------------------------------------------
# Exploded supergraph


class ExplodedSupergraph:
    """Exploded supergraph with per-class CSR adjacency.

    Immutable after construction.
    """

    def __init__(self, arena: Arena):
        self.arena = arena
        nf = self.nfacts = arena.nfacts
        self.nvertices = len(arena.vertices)
        self.size = self.nvertices * nf
        offs = [[0] * (self.size + 1) for _ in EdgeClass]
        tgts: list[list[int]] = [[] for _ in EdgeClass]
        for v in arena.vertices:
            outs: list[tuple[int, int, FlowRelation]] = [(int(e.cls), e.dst, e.rel) for e in arena.out_edges[v.gid]]
            if v.kind is VertexKind.CALL:
                cs = arena.callsite_of[v.gid]
                outs.append((int(EdgeClass.CALL_START), arena.functions[cs.callee].start, cs.call_rel))
            elif v.kind is VertexKind.EXIT:
                for cs in arena.callers[v.func]:
                    outs.append((int(EdgeClass.EXIT_RETURN), cs.retsite, cs.ret_rel))
            base = v.gid * nf
            for d in range(nf):
                for cls, dst, rel in outs:
                    db = dst * nf
                    tgts[cls].extend(db + t for t in rel.images[d])
                for cls in range(len(EdgeClass)):
                    offs[cls][base + d + 1] = len(tgts[cls])
        self._off = offs
        self._tgt = tgts

    def xid(self, gid: int, d: int) -> int:
        return gid * self.nfacts + d

    def split(self, x: int) -> tuple[int, int]:
        return divmod(x, self.nfacts)

    def succ(self, x: int, cls: EdgeClass | int) -> list[int]:
        off = self._off[cls]
        return self._tgt[cls][off[x] : off[x + 1]]

    def edges(self) -> Iterator[tuple[int, int, EdgeClass]]:
        for cls in EdgeClass:
            off, tgt = self._off[cls], self._tgt[cls]
            for x in range(self.size):
                for k in range(off[x], off[x + 1]):
                    yield x, tgt[k], cls

    def edge_count(self, cls: EdgeClass | None = None) -> int:
        if cls is None:
            return sum(len(t) for t in self._tgt)
        return len(self._tgt[cls])

    def has_edge(self, x: int, y: int, cls: EdgeClass | None = None) -> bool:
        classes = EdgeClass if cls is None else (cls,)
        return any(y in self.succ(x, c) for c in classes)


def build_exploded(arena: Arena) -> ExplodedSupergraph:
    return ExplodedSupergraph(arena)


@dataclass(frozen=True)
class CallGraph:
    nfunctions: int
    edges: dict[tuple[int, int], tuple[int, ...]]

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.nfunctions)]
        for a, b in sorted(self.edges):
            out[a].append(b)
        return tuple(tuple(x) for x in out)

    def undirected(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {i: set() for i in range(self.nfunctions)}
        for a, b in self.edges:
            if a != b:
                adj[a].add(b)
                adj[b].add(a)
        return adj


def build_call_graph(arena: Arena) -> CallGraph:
    edges: dict[tuple[int, int], list[int]] = {}
    for cs in arena.callsites:
        edges.setdefault((cs.caller, cs.callee), []).append(cs.call)
    return CallGraph(len(arena.functions), {k: tuple(v) for k, v in sorted(edges.items())})


def arena_a_path() -> Path:
    return Path(__file__).with_name("fixtures") / "arena_a.json"


def load_arena_a() -> Arena:
    return load_arena(arena_a_path())
