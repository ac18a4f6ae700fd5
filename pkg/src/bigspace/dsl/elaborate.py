"""Lowering parsed programs to bigraph values and reaction rules."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple, Union

from ..bigraph import (
    Bigraph,
    Control,
    close_name,
    juxtapose,
    merge,
    merge_under,
)
from ..errors import (
    ArityMismatch,
    DuplicateName,
    ElaborationError,
    InterfaceMismatch,
    UnboundSite,
    UnknownControl,
)
from ..matching import check_solid
from ..rewriting import BrsSpec, EscalationClause, ReactionRule, Selector
from . import parser as ast


@dataclass
class BrsDef:
    init: Bigraph
    init_name: Optional[str]
    classes: Tuple[Tuple[str, ...], ...]


@dataclass
class Program:
    signature: Dict[str, Control] = field(default_factory=dict)
    bigraphs: Dict[str, Bigraph] = field(default_factory=dict)
    big_sites: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    rules: Dict[str, ReactionRule] = field(default_factory=dict)
    brs: Optional[BrsDef] = None

    def brs_spec(self) -> BrsSpec:
        if self.brs is None:
            raise ElaborationError("program has no brs block")
        order = list(self.rules)
        classes = tuple(
            tuple(self.rules[n] for n in sorted(cls, key=order.index))
            for cls in self.brs.classes
        )
        return BrsSpec(self.brs.init, classes)


class _Elaborator:
    def __init__(self, signature: Dict[str, Control]):
        self.sig = signature

    def lower(self, e: ast.Expr, top: bool) -> Tuple[Bigraph, List[str]]:
        """Bigraph for ``e`` plus the names of its sites in index order.

        At top level ``||`` separates regions and ``|`` merges; inside a
        nesting both merge.
        """
        if isinstance(e, ast.Empty):
            return Bigraph.empty(self.sig), []
        if isinstance(e, ast.SiteRef):
            return Bigraph.identity(1, (), self.sig), [e.name]
        if isinstance(e, ast.Close):
            b, sites = self.lower(e.body, top)
            if e.name not in b.interface.outer:
                b = replace(b, interface=replace(b.interface, outer=b.interface.outer | {e.name}))
            return close_name(b, e.name), sites
        if isinstance(e, ast.Par):
            left, ls = self.lower(e.left, top)
            right, rs = self.lower(e.right, top)
            both = juxtapose(left, right)
            if not top or e.op == "|":
                both = merge(both)
            return both, ls + rs
        if isinstance(e, ast.Ion):
            ctrl = self.sig.get(e.control)
            if ctrl is None:
                raise UnknownControl(f"{e.line}:{e.column}: undeclared control {e.control}")
            if len(e.names) != ctrl.arity:
                raise ArityMismatch(
                    f"{e.line}:{e.column}: {e.control} has arity {ctrl.arity}, given {len(e.names)} names")
            ion = Bigraph.ion(ctrl, e.names, self.sig)
            if ctrl.atomic:
                if e.body is not None and not isinstance(e.body, ast.Empty):
                    raise ElaborationError(f"{e.line}:{e.column}: atomic control {e.control} cannot nest")
                return ion, []
            if e.body is None:
                return merge_under(ion, []), []
            body, sites = self.lower(e.body, top=False)
            return merge_under(ion, [body]), sites
        raise TypeError(f"not an expression: {e!r}")


def _signature(decls: List[ast.CtrlDecl]) -> Dict[str, Control]:
    sig: Dict[str, Control] = {}
    for d in decls:
        if d.name in sig:
            raise DuplicateName(f"{d.line}:{d.column}: control {d.name} declared twice")
        sig[d.name] = Control(d.name, d.arity, d.atomic)
    return sig


def elaborate_expr(expr: ast.Expr, signature: Dict[str, Control]) -> Tuple[Bigraph, List[str]]:
    b, sites = _Elaborator(signature).lower(expr, top=True)
    return replace(b, signature=dict(signature)), sites


def elaborate_rule(d: ast.ReactDef, signature: Dict[str, Control]) -> ReactionRule:
    redex, rsites = elaborate_expr(d.redex, signature)
    reactum, tsites = elaborate_expr(d.reactum, signature)
    where = f"{d.line}:{d.column}: rule {d.name}"
    seen = set()
    for s in rsites:
        if s in seen:
            raise DuplicateName(f"{where}: site {s} appears twice in the redex")
        seen.add(s)
    eta = []
    for s in tsites:
        if s not in seen:
            raise UnboundSite(f"{where}: reactum site {s} does not occur in the redex")
        eta.append(rsites.index(s))
    if redex.interface.outer != reactum.interface.outer:
        raise InterfaceMismatch(sorted(redex.interface.outer), sorted(reactum.interface.outer),
                                f"{where}: outer names")
    if redex.interface.roots != reactum.interface.roots:
        raise InterfaceMismatch(redex.interface.roots, reactum.interface.roots, f"{where}: regions")
    check_solid(redex)

    clause = None
    if d.annotations:
        if len(d.annotations) > 1:
            raise ElaborationError(f"{where}: at most one @escalate clause")
        ann = d.annotations[0]
        fields = []
        names = set()
        for fname, sel in ann.fields:
            if fname in names:
                raise DuplicateName(f"{where}: escalation field {fname} given twice")
            names.add(fname)
            if sel.kind not in Selector.RESULT_TYPES:
                raise ElaborationError(f"{where}: unknown selector {sel.kind}")
            needs_arg = sel.kind in ("labels", "count")
            if needs_arg != (sel.arg is not None):
                raise ElaborationError(f"{where}: selector {sel.kind} takes "
                                       f"{'a control' if needs_arg else 'no argument'}")
            if sel.arg is not None and sel.arg not in signature:
                raise UnknownControl(f"{where}: undeclared control {sel.arg}")
            fields.append((fname, Selector(sel.kind, sel.arg)))
        clause = EscalationClause(ann.schema_id, tuple(fields))

    return ReactionRule(d.name, redex, reactum, tuple(eta), clause, tuple(rsites))


def elaborate(program: ast.ProgramAst) -> Program:
    sig = _signature(program.controls)
    out = Program(signature=sig)
    for d in program.decls:
        if isinstance(d, ast.BigDef):
            if d.name in out.bigraphs:
                raise DuplicateName(f"{d.line}:{d.column}: bigraph {d.name} defined twice")
            b, sites = elaborate_expr(d.expr, sig)
            out.bigraphs[d.name] = b
            out.big_sites[d.name] = tuple(sites)
        elif isinstance(d, ast.ReactDef):
            if d.name in out.rules:
                raise DuplicateName(f"{d.line}:{d.column}: rule {d.name} defined twice")
            out.rules[d.name] = elaborate_rule(d, sig)

    block = program.brs
    if block is not None:
        where = f"{block.line}:{block.column}: brs"
        if block.init is None:
            raise ElaborationError(f"{where}: missing init")
        if isinstance(block.init, str):
            if block.init not in out.bigraphs:
                raise ElaborationError(f"{where}: unknown bigraph {block.init}")
            init, init_name = out.bigraphs[block.init], block.init
        else:
            init, _ = elaborate_expr(block.init, sig)
            init_name = None
        if not block.classes:
            raise ElaborationError(f"{where}: rules list is empty")
        listed = set()
        for cls in block.classes:
            for name in cls:
                if name not in out.rules:
                    raise ElaborationError(f"{where}: unknown rule {name}")
                if name in listed:
                    raise DuplicateName(f"{where}: rule {name} listed twice")
                listed.add(name)
        out.brs = BrsDef(init, init_name, block.classes)
    return out


def load_program(source: str) -> Program:
    return elaborate(ast.parse(source))


def bigraph_from_expr(source: str, signature: Union[Dict[str, Control], List[Control]]) -> Bigraph:
    """Build a bigraph from a single expression, e.g. ``"/x A.(B{x} | C{x})"``."""
    if not isinstance(signature, dict):
        signature = {c.name: c for c in signature}
    b, _ = elaborate_expr(ast.parse_expr(source), signature)
    return b
