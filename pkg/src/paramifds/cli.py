"""Command-line entry point."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .arena import load_arena
from .engine import load_index, preprocess, query, same_context, save_index
from .errors import (
    CorruptIndex,
    EngineDisagreement,
    IfdsError,
    IndexMismatch,
)
from .harness import ENGINES, GenSpec, TEMPLATES, arena_stats, bench, gen_workload, generate, get_engine, write_csv

EXIT_OK, EXIT_INVALID, EXIT_DISAGREE, EXIT_IO = 0, 1, 2, 3


def _endpoint(text: str) -> tuple[str, str]:
    vertex, sep, fact = text.rpartition(":")
    if not sep or not vertex or not fact:
        raise argparse.ArgumentTypeError(f"expected VERTEX:FACT, got {text!r}")
    return vertex, fact


def _read_arena(path: str, fix_zero: bool = False):
    text = Path(path).read_bytes()
    return load_arena(text, fix_zero=fix_zero)


def cmd_validate(args) -> int:
    a = _read_arena(args.arena, args.fix_zero)
    print(
        f"ok: {len(a.functions)} functions, {len(a.vertices)} vertices, "
        f"{len(a.callsites)} call sites, |D*|={a.nfacts}"
    )
    return EXIT_OK


def cmd_stats(args) -> int:
    a = _read_arena(args.arena)
    rows, depth = arena_stats(a)
    name_w = max([len("function"), *(len(r[0]) for r in rows)])
    print(f"{'function':<{name_w}}  width  height")
    for name, w, h in rows:
        print(f"{name:<{name_w}}  {w:>5}  {h:>6}")
    print(f"call graph depth: {depth}")
    if args.csv:
        fh = sys.stdout if args.csv == "-" else open(args.csv, "w", newline="")
        try:
            out = csv.writer(fh)
            out.writerow(["function", "width", "height"])
            out.writerows(rows)
            out.writerow(["callgraph", depth])
        finally:
            if fh is not sys.stdout:
                fh.close()
    return EXIT_OK


def cmd_gen(args) -> int:
    spec = GenSpec(
        functions=args.functions,
        lines=(args.lines[0], args.lines[1]),
        width=args.width,
        depth=args.depth,
        facts=args.facts,
        calls=args.calls,
        template=args.template,
        seed=args.seed,
        bandwidth=args.bandwidth,
    )
    a = generate(spec)
    Path(args.output).write_text(json.dumps(a.to_document(), indent=1) + "\n", encoding="utf-8")
    print(f"wrote {args.output}: {len(a.functions)} functions, {len(a.vertices)} vertices")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    a = _read_arena(args.arena)
    idx = preprocess(a)
    save_index(idx, args.output)
    print(f"wrote {args.output} in {idx.timings['total']:.3f}s")
    return EXIT_OK


def cmd_query(args) -> int:
    idx = load_index(Path(args.index))
    arena = _read_arena(args.arena) if args.arena else None
    if arena is not None and arena.fingerprint != idx.fingerprint:
        raise IndexMismatch("index was built from a different arena")
    (u1, d1), (u2, d2) = args.source, args.target
    if args.same_context:
        res = same_context(idx, u1, d1, u2, d2)
    elif args.engine == "param":
        res = query(idx, u1, d1, u2, d2, witness=args.witness)
    else:
        eng = get_engine(args.engine)
        state = eng.prepare(idx.arena)
        nf = idx.nfacts
        x1, x2 = idx._resolve(u1, d1), idx._resolve(u2, d2)
        print("true" if eng.answer(state, (x1 // nf, x1 % nf, x2 // nf, x2 % nf)) else "false")
        return EXIT_OK
    print("true" if res.verdict else "false")
    if res.witness:
        names = idx.arena.vertices
        fname = idx.arena.functions
        dom = idx.arena.domain
        for seg in res.witness:
            if seg[0] == "callgraph":
                hops = " -> ".join(f"({fname[f].name},{dom.name(d)})" for f, d in seg[1])
                print(f"  callgraph: {hops}")
            else:
                (a, da), (b, db) = seg[1], seg[2]
                print(f"  {seg[0]}: ({names[a].name},{dom.name(da)}) -> ({names[b].name},{dom.name(db)})")
    return EXIT_OK


def cmd_bench(args) -> int:
    a = _read_arena(args.arena)
    n = min(args.queries, len(a.vertices))
    workload = gen_workload(a, n, args.seed)
    engines = [e.strip() for e in args.engines.split(",") if e.strip()]
    records = bench(a, workload, engines, arena_id=Path(args.arena).stem, repeats=args.repeats)
    if args.csv:
        write_csv(records, args.csv)
    for r in records:
        print(",".join(r.row()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paramifds", description="Parameterized on-demand IFDS analysis.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check an arena document")
    s.add_argument("arena")
    s.add_argument("--fix-zero", action="store_true", help="insert missing (0,0) pairs instead of rejecting")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("stats", help="per-function width and height, call-graph depth")
    s.add_argument("arena")
    s.add_argument("--csv", metavar="PATH", help="also write CSV rows ('-' for stdout)")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("gen", help="generate a synthetic arena")
    s.add_argument("--functions", type=int, default=10)
    s.add_argument("--lines", type=int, nargs=2, metavar=("LO", "HI"), default=(8, 40))
    s.add_argument("--width", type=int, default=2)
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--facts", type=int, default=2)
    s.add_argument("--calls", type=int, default=2)
    s.add_argument("--template", choices=TEMPLATES, default="reach")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--bandwidth", type=int, default=4)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("preprocess", help="build and save a query index")
    s.add_argument("arena")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("query", help="answer one reachability query")
    s.add_argument("index")
    s.add_argument("--from", dest="source", type=_endpoint, required=True, metavar="V:D")
    s.add_argument("--to", dest="target", type=_endpoint, required=True, metavar="V:D")
    s.add_argument("--same-context", action="store_true")
    s.add_argument("--witness", action="store_true")
    s.add_argument("--arena", help="arena document to check the index against")
    s.add_argument("--engine", choices=sorted(ENGINES), default="param")
    s.set_defaults(func=cmd_query)

    s = sub.add_parser("bench", help="cross-check and time engines on a random workload")
    s.add_argument("arena")
    s.add_argument("--queries", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--engines", default="param,ivp-dfs,dyck")
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--csv", metavar="PATH")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EngineDisagreement as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DISAGREE
    except (OSError, CorruptIndex, IndexMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (IfdsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
