"""Small builders for hand-written arena documents."""

from __future__ import annotations

import copy
import json

from paramifds.arena import arena_a_path


def arena_a_doc() -> dict:
    return json.loads(arena_a_path().read_text())


def mutated(fn) -> dict:
    doc = copy.deepcopy(arena_a_doc())
    fn(doc)
    return doc


def chain_arena(nf: int = 1) -> dict:
    """main -> f -> g, each function a straight line passing every fact through."""
    ident = [[d, d] for d in range(nf + 1)]

    def fn(name, callee=None):
        verts = [{"id": f"s_{name}", "kind": "start"}]
        edges = []
        calls = []
        if callee:
            verts += [
                {"id": f"c_{name}", "kind": "call", "callee": callee, "retsite": f"r_{name}"},
                {"id": f"r_{name}", "kind": "retsite"},
            ]
            edges += [
                {"from": f"s_{name}", "to": f"c_{name}", "rel": ident},
                {"from": f"c_{name}", "to": f"r_{name}", "rel": [[0, 0]]},
                {"from": f"r_{name}", "to": f"e_{name}", "rel": ident},
            ]
            calls.append({"call": f"c_{name}", "call_rel": ident, "ret_rel": ident})
        else:
            edges.append({"from": f"s_{name}", "to": f"e_{name}", "rel": ident})
        verts.append({"id": f"e_{name}", "kind": "exit"})
        return {"name": name, "vertices": verts, "edges": edges, "calls": calls}

    return {
        "facts": [f"v{k}" for k in range(nf)],
        "bandwidth": 4,
        "functions": [fn("main", "f"), fn("f", "g"), fn("g")],
    }
