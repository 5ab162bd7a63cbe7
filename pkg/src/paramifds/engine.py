"""Preprocessing into a persistent query index, general queries and MIVP sets."""

from __future__ import annotations

import hashlib
import io
import json
import struct
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO

from .arena import Arena, build_call_graph, build_exploded, load_arena
from .calldepth import (
    CallReachLists,
    ExpandedPot,
    ExplodedCallGraph,
    UpDownTables,
    call_graph_reachable,
    expand_pot,
    step2_call_reach,
    step3_exploded_call_graph,
    step4_up_down,
)
from .decomp import POT, TreeDecomposition, compute_pot
from .errors import CorruptIndex, FingerprintMismatch, IndexMismatch, UnknownVertex, VersionMismatch
from .samectx import FunctionTables, SameCtxIndex, build_samectx
from .summaries import compute_summaries

MAGIC = b"IFDSIDX1"
FORMAT_VERSION = 1
SECTIONS = ("arena", "samectx", "callreach", "callgraph", "pot", "updown")


@dataclass
class QueryResult:
    verdict: bool
    witness: list[tuple] | None = None

    def __bool__(self) -> bool:
        return self.verdict


@dataclass
class QueryIndex:
    arena: Arena
    samectx: SameCtxIndex
    callreach: CallReachLists
    callgraph: ExplodedCallGraph
    pot: POT
    tpot: ExpandedPot
    updown: UpDownTables
    version: int = FORMAT_VERSION
    timings: dict[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a = self.arena
        nf = self.nfacts = a.nfacts
        self._fg = [v.func for v in a.vertices]
        self._start = [f.start for f in a.functions]
        self._first = [f.first for f in a.functions]
        self._masks = self.callreach.masks
        self._calls = [f.calls for f in a.functions]
        # call-start successors of every call slot (c, d3), as exploded call graph nodes
        ex_targets: dict[int, tuple[int, ...]] = {}
        for cs in a.callsites:
            for d3 in range(nf):
                ex_targets[cs.call * nf + d3] = tuple(cs.callee * nf + d4 for d4 in cs.call_rel.images[d3])
        self._entry_targets = ex_targets

    @property
    def fingerprint(self) -> str:
        return self.arena.fingerprint

    # -- queries -----------------------------------------------------------

    def _resolve(self, u, d) -> int:
        try:
            gid = self.arena.vertex(u if isinstance(u, int) else str(u))
        except KeyError:
            raise UnknownVertex(f"unknown vertex {u!r}") from None
        try:
            fact = self.arena.domain.index(d)
        except KeyError:
            raise UnknownVertex(f"unknown fact {d!r}") from None
        return gid * self.nfacts + fact

    def same_context(self, x1: int, x2: int) -> bool:
        return self.samectx.query_x(x1, x2)

    def ask(self, x1: int, x2: int) -> bool:
        """General query on global exploded ids."""
        if self.samectx.query_x(x1, x2):
            return True
        nf = self.nfacts
        u1, u2 = x1 // nf, x2 // nf
        i, j = self._fg[u1], self._fg[u2]
        sj = self._start[j] * nf
        scq = self.samectx.query_x
        targets = [j * nf + d5 for d5 in range(nf) if scq(sj + d5, x2)]
        if not targets:
            return False
        mask = self._masks[i][x1 - self._first[i] * nf]
        if not mask:
            return False
        calls = self._calls[i]
        tbl, tpot = self.updown, self.tpot
        entry = self._entry_targets
        seen: set[int] = set()
        while mask:
            low = mask & -mask
            k, d3 = divmod(low.bit_length() - 1, nf)
            mask ^= low
            for a in entry[calls[k] * nf + d3]:
                if a in seen:
                    continue
                seen.add(a)
                for b in targets:
                    if call_graph_reachable(tbl, tpot, a, b):
                        return True
        return False

    def witness(self, x1: int, x2: int) -> list[tuple] | None:
        nf = self.nfacts
        split = lambda x: divmod(x, nf)  # noqa: E731
        if self.samectx.query_x(x1, x2):
            return [("scvp", split(x1), split(x2))]
        u2 = x2 // nf
        j = self._fg[u2]
        sj = self._start[j] * nf
        targets = [j * nf + d5 for d5 in range(nf) if self.samectx.query_x(sj + d5, x2)]
        for xc in self.callreach.lookup(x1):
            for a in self._entry_targets[xc]:
                for b in targets:
                    if call_graph_reachable(self.updown, self.tpot, a, b):
                        hops = self.callgraph.path(a, b)
                        return [
                            ("sigma0", split(x1), split(xc)),
                            ("call", split(xc), (self._start[a // nf], a % nf)),
                            ("callgraph", [split(h) for h in hops]),
                            ("scvp", split(b - j * nf + sj), split(x2)),
                        ]
        return None

    # -- persistence -------------------------------------------------------

    def sections(self) -> dict[str, Any]:
        hexs = lambda xs: [format(x, "x") for x in xs]  # noqa: E731
        return {
            "arena": self.arena.to_document(),
            "samectx": [
                {
                    "bags": [sorted(b) for b in t.td.bags],
                    "parent": list(t.td.parent),
                    "fwd": hexs(t.fwd),
                    "rev": hexs(t.rev),
                }
                for t in self.samectx.tables
            ],
            "callreach": [hexs(m) for m in self.callreach.masks],
            "callgraph": [list(e) for e in self.callgraph.edges],
            "pot": list(self.pot.parent),
            "updown": {"up": hexs(self.updown.up), "down": hexs(self.updown.down)},
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QueryIndex):
            return NotImplemented
        return self.version == other.version and self.sections() == other.sections()

    def to_bytes(self) -> bytes:
        out = io.BytesIO()
        out.write(MAGIC)
        out.write(struct.pack("<H", self.version))
        out.write(bytes.fromhex(self.fingerprint))
        secs = self.sections()
        out.write(struct.pack("<H", len(SECTIONS)))
        for name in SECTIONS:
            payload = zlib.compress(
                json.dumps(secs[name], sort_keys=True, separators=(",", ":")).encode("utf-8"), 6
            )
            raw_name = name.encode("ascii")
            out.write(struct.pack("<B", len(raw_name)))
            out.write(raw_name)
            out.write(struct.pack("<QI", len(payload), zlib.crc32(payload)))
            out.write(payload)
        return out.getvalue()


def preprocess(a: Arena) -> QueryIndex:
    """Steps 1-4: summaries and same-context tables, call-reach lists,
    the exploded call graph with its expanded POT, and up/down tables."""
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    ex = build_exploded(a)
    sg = compute_summaries(ex)
    timings["summaries"] = time.perf_counter() - t0
    t1 = time.perf_counter()
    sc = build_samectx(sg)
    timings["samectx"] = time.perf_counter() - t1
    t1 = time.perf_counter()
    cr = step2_call_reach(sg)
    timings["callreach"] = time.perf_counter() - t1
    t1 = time.perf_counter()
    cg = step3_exploded_call_graph(a, sc)
    pot = compute_pot(build_call_graph(a).undirected())
    tpot = ExpandedPot(expand_pot(pot, a.nfacts))
    timings["callgraph"] = time.perf_counter() - t1
    t1 = time.perf_counter()
    ud = step4_up_down(cg, tpot)
    timings["updown"] = time.perf_counter() - t1
    timings["total"] = time.perf_counter() - t0
    return QueryIndex(a, sc, cr, cg, pot, tpot, ud, timings=timings)


def _check_arena(idx: QueryIndex, arena: Arena | None) -> None:
    if arena is not None and arena.fingerprint != idx.fingerprint:
        raise IndexMismatch("index was built from a different arena")


def query(idx: QueryIndex, u1, d1, u2, d2, *, arena: Arena | None = None, witness: bool = False) -> QueryResult:
    _check_arena(idx, arena)
    x1, x2 = idx._resolve(u1, d1), idx._resolve(u2, d2)
    verdict = idx.ask(x1, x2)
    wit = idx.witness(x1, x2) if witness and verdict else None
    return QueryResult(verdict, wit)


def same_context(idx: QueryIndex, u1, d1, u2, d2, *, arena: Arena | None = None) -> QueryResult:
    _check_arena(idx, arena)
    x1, x2 = idx._resolve(u1, d1), idx._resolve(u2, d2)
    return QueryResult(idx.same_context(x1, x2))


def mivp(idx: QueryIndex, u1, facts, u2, *, arena: Arena | None = None) -> set[int]:
    """Facts (other than the zero fact) holding at u2 given ``facts`` at u1."""
    _check_arena(idx, arena)
    nf = idx.nfacts
    g1 = idx._resolve(u1, 0) // nf
    g2 = idx._resolve(u2, 0) // nf
    sources = {0} | {idx.arena.domain.index(d) for d in facts}
    out = set()
    for d2 in range(1, nf):
        if any(idx.ask(g1 * nf + d1, g2 * nf + d2) for d1 in sources):
            out.add(d2)
    return out


def save_index(idx: QueryIndex, sink: str | Path | BinaryIO) -> None:
    data = idx.to_bytes()
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(data)
    else:
        sink.write(data)


def _read_exact(buf: io.BytesIO, n: int) -> bytes:
    data = buf.read(n)
    if len(data) != n:
        raise CorruptIndex("index file is truncated")
    return data


def load_index(source: str | Path | BinaryIO | bytes, *, arena: Arena | None = None) -> QueryIndex:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    else:
        data = source.read()
    buf = io.BytesIO(data)
    if _read_exact(buf, len(MAGIC)) != MAGIC:
        raise CorruptIndex("bad magic bytes")
    (version,) = struct.unpack("<H", _read_exact(buf, 2))
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"index format version {version}, expected {FORMAT_VERSION}")
    fingerprint = _read_exact(buf, 32).hex()
    if arena is not None and arena.fingerprint != fingerprint:
        raise FingerprintMismatch("index was built from a different arena")
    (count,) = struct.unpack("<H", _read_exact(buf, 2))
    secs: dict[str, Any] = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<B", _read_exact(buf, 1))
        name = _read_exact(buf, nlen).decode("ascii", errors="replace")
        length, crc = struct.unpack("<QI", _read_exact(buf, 12))
        payload = _read_exact(buf, length)
        if zlib.crc32(payload) != crc:
            raise CorruptIndex(f"checksum mismatch in section {name!r}")
        try:
            secs[name] = json.loads(zlib.decompress(payload))
        except (zlib.error, ValueError) as exc:
            raise CorruptIndex(f"section {name!r} does not decode: {exc}") from exc
    if buf.read(1):
        raise CorruptIndex("trailing bytes after the last section")
    missing = [s for s in SECTIONS if s not in secs]
    if missing:
        raise CorruptIndex(f"missing sections: {', '.join(missing)}")
    try:
        return _from_sections(secs, fingerprint)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CorruptIndex(f"malformed index tables: {exc}") from exc


def _from_sections(secs: dict[str, Any], fingerprint: str) -> QueryIndex:
    a = load_arena(secs["arena"])
    if a.fingerprint != fingerprint:
        raise CorruptIndex("embedded arena does not match the header fingerprint")
    nf = a.nfacts
    unhex = lambda xs: [int(x, 16) for x in xs]  # noqa: E731
    tables = []
    for i, s in enumerate(secs["samectx"]):
        td = TreeDecomposition(tuple(frozenset(b) for b in s["bags"]), tuple(s["parent"]))
        full = (1 << nf) - 1
        bagmask = []
        for bag in td.bags:
            m = 0
            for u in bag:
                m |= full << (u * nf)
            bagmask.append(m)
        top = [-1] * a.functions[i].count
        for b in td.preorder:
            for u in td.bags[b]:
                if top[u] < 0:
                    top[u] = b
        tables.append(FunctionTables(i, nf, td, unhex(s["fwd"]), unhex(s["rev"]), bagmask, top))
    if len(tables) != len(a.functions):
        raise CorruptIndex("same-context tables do not cover every function")
    sc = SameCtxIndex(a, tables)
    cr = CallReachLists(a, [unhex(m) for m in secs["callreach"]])
    cg = ExplodedCallGraph(len(a.functions), nf, tuple(tuple(e) for e in secs["callgraph"]))
    pot = POT(tuple(secs["pot"]))
    tpot = ExpandedPot(expand_pot(pot, nf))
    ud = UpDownTables(unhex(secs["updown"]["up"]), unhex(secs["updown"]["down"]))
    return QueryIndex(a, sc, cr, cg, pot, tpot, ud)


def index_digest(idx: QueryIndex) -> str:
    return hashlib.sha256(idx.to_bytes()).hexdigest()
