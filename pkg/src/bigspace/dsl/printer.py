"""Canonical source text for elaborated programs."""
from __future__ import annotations

from typing import Dict, List, Sequence

from ..bigraph import Bigraph, Edge, Root, Site, canonical_order, subtree_hashes
from ..rewriting import ReactionRule
from .elaborate import Program
from .lexer import KEYWORDS

INDENT = "    "


def format_bigraph(b: Bigraph, site_names: Sequence[str] = ()) -> str:
    """Expression text that elaborates to a bigraph iso_eq to ``b``.

    Closed edges get fresh names ``e0, e1, ...`` in order of first use and
    all closures are hoisted to the front.  Sites keep their numbering.
    Labels have no surface syntax and are dropped.
    """
    site_names = list(site_names) or [f"s{i}" for i in range(b.interface.sites)]
    taken = set(b.interface.outer) | set(site_names) | KEYWORDS
    edge_names: Dict[int, str] = {}
    counter = [0]

    def edge_name(e: int) -> str:
        # named in order of first appearance so printing is a fixed point
        if e not in edge_names:
            while f"e{counter[0]}" in taken:
                counter[0] += 1
            edge_names[e] = f"e{counter[0]}"
            counter[0] += 1
        return edge_names[e]

    hashes = subtree_hashes(b)
    rank = {n: i for i, n in enumerate(canonical_order(b))}

    def link(t) -> str:
        return edge_name(t.id) if isinstance(t, Edge) else t.name

    def term(p) -> str:
        if isinstance(p, Site):
            return site_names[p.index]
        node = b.nodes[p]
        ctrl = b.signature[node.control]
        text = node.control
        if node.ports:
            text += "{" + ", ".join(link(t) for t in node.ports) + "}"
        kids = b.children.get(p, [])
        if kids and not ctrl.atomic:
            text += ".(" + " | ".join(term(c) for c in ordered(kids)) + ")"
        return text

    first_site: Dict[object, int] = {}
    for i in range(b.interface.sites):
        p = b.parent.get(Site(i))
        first_site[Site(i)] = i
        while isinstance(p, int):
            first_site.setdefault(p, i)
            p = b.parent[p]

    def ordered(kids):
        # sites are numbered by first appearance, so subtrees holding sites
        # keep their index order; the rest follow in canonical order
        holding = sorted((c for c in kids if c in first_site), key=first_site.__getitem__)
        plain = sorted((c for c in kids if c not in first_site), key=lambda c: (hashes[c], rank[c]))
        return holding + plain

    regions: List[str] = []
    for r in range(b.interface.roots):
        kids = b.children.get(Root(r), [])
        if not kids:
            regions.append("()")
            continue
        parts = [term(c) for c in ordered(kids)]
        text = " | ".join(parts)
        if len(parts) > 1 and b.interface.roots > 1:
            text = f"({text})"
        regions.append(text)
    body = " || ".join(regions)
    for e in sorted(b.edges):
        edge_name(e)
    if edge_names:
        closures = " ".join(f"/{name}" for name in edge_names.values())
        return f"{closures} ({body})"
    return body


def _format_rule(rule: ReactionRule) -> str:
    redex = format_bigraph(rule.redex, rule.site_names)
    reactum = format_bigraph(rule.reactum, [rule.site_names[s] for s in rule.eta])
    text = f"react {rule.name} =\n{INDENT}{redex}\n{INDENT}--> {reactum}"
    if rule.escalation is not None:
        fields = ", ".join(f"{name}={sel}" for name, sel in rule.escalation.fields)
        text += f"\n{INDENT}@escalate({rule.escalation.schema_id}; {fields})"
    return text + ";"


def pretty_print(program: Program) -> str:
    blocks: List[str] = []
    ctrls = []
    for c in program.signature.values():
        prefix = "atomic ctrl" if c.atomic else "ctrl"
        ctrls.append(f"{prefix} {c.name} = {c.arity};")
    if ctrls:
        blocks.append("\n".join(ctrls))
    for name, b in program.bigraphs.items():
        blocks.append(f"big {name} = {format_bigraph(b, program.big_sites.get(name, ()))};")
    for rule in program.rules.values():
        blocks.append(_format_rule(rule))
    if program.brs is not None:
        if program.brs.init_name is not None:
            init = program.brs.init_name
        else:
            init = format_bigraph(program.brs.init)
        classes = ", ".join("{" + ", ".join(cls) + "}" for cls in program.brs.classes)
        blocks.append(f"begin brs\n{INDENT}init {init};\n{INDENT}rules = [{classes}];\nend")
    if not blocks:
        return ""
    return "\n\n".join(blocks) + "\n"
