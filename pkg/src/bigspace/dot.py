"""Graphviz DOT rendering of a bigraph.

Places with contents become solid clusters; links are drawn as dashed,
arrowless edges fanning out from one point node per link.
"""
from __future__ import annotations

from typing import List

from .bigraph import Bigraph, Edge, Name, Root, Site, canonical_order, link_key


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _link_id(t) -> str:
    return f"e{t.id}" if isinstance(t, Edge) else f"name_{t.name}"


def export_dot(b: Bigraph, title: str = "bigraph") -> str:
    lines: List[str] = [f"digraph {_quote(title)} {{",
                        "  graph [compound=true, rankdir=TB];",
                        '  node [shape=box, fontname="Helvetica"];']
    rank = {n: i for i, n in enumerate(canonical_order(b))}

    def ordered(kids):
        nodes = sorted((c for c in kids if not isinstance(c, Site)), key=lambda c: rank[c])
        return nodes + sorted(c for c in kids if isinstance(c, Site))

    def caption(n: int) -> str:
        node = b.nodes[n]
        return node.control if node.label is None else f"{node.control} {node.label}"

    def emit(p, depth: int) -> None:
        pad = "  " * depth
        if isinstance(p, Site):
            lines.append(f'{pad}site{p.index} [label="site {p.index}", style=dashed];')
            return
        kids = b.children.get(p, [])
        if not kids:
            lines.append(f"{pad}n{p} [label={_quote(caption(p))}];")
            return
        lines.append(f"{pad}subgraph cluster_n{p} {{")
        lines.append(f"{pad}  label={_quote(caption(p))}; style=solid;")
        lines.append(f'{pad}  n{p} [label="", shape=point, style=invis];')
        for c in ordered(kids):
            emit(c, depth + 1)
        lines.append(f"{pad}}}")

    for r in range(b.interface.roots):
        kids = b.children.get(Root(r), [])
        if not kids:
            continue
        lines.append(f"  subgraph cluster_root{r} {{")
        lines.append(f'    label="region {r}"; style=dotted;')
        for c in ordered(kids):
            emit(c, 2)
        lines.append("  }")

    for link in sorted(b.links(), key=link_key):
        points = sorted(b.points.get(link, ()), key=lambda pt: (rank.get(pt[0], -1), pt[1]))
        lid = _link_id(link)
        if isinstance(link, Name):
            lines.append(f"  {lid} [label={_quote(link.name)}, shape=plaintext];")
        else:
            lines.append(f'  {lid} [label="", shape=point];')
        for n, port in points:
            lines.append(f'  n{n} -> {lid} [style=dashed, arrowhead=none, taillabel="{port}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


__all__ = ["export_dot"]
