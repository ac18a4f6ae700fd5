"""Recursive-descent parser producing a plain AST.

Grammar (lowest to highest binding)::

    expr    := closure (("|" | "||") closure)*          left-associative
    closure := "/" IDENT closure | atom
    atom    := CTRL ["{" names "}"] ["." atom]
             | "(" ")" | "1" | "(" expr ")" | IDENT      (IDENT = named site)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

from ..errors import ParseError
from .lexer import Token, tokenize


# -- expressions ----------------------------------------------------------

@dataclass(frozen=True)
class Ion:
    control: str
    names: Tuple[str, ...]
    body: Optional["Expr"]
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class Par:
    op: str             # "|" or "||"
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Close:
    name: str
    body: "Expr"


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class SiteRef:
    name: str
    line: int = 0
    column: int = 0


Expr = Union[Ion, Par, Close, Empty, SiteRef]


# -- declarations ---------------------------------------------------------

@dataclass(frozen=True)
class CtrlDecl:
    name: str
    arity: int
    atomic: bool = False
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class BigDef:
    name: str
    expr: Expr
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class SelectorAst:
    kind: str
    arg: Optional[str] = None


@dataclass(frozen=True)
class EscalateAnn:
    schema_id: str
    fields: Tuple[Tuple[str, SelectorAst], ...]


@dataclass(frozen=True)
class ReactDef:
    name: str
    redex: Expr
    reactum: Expr
    annotations: Tuple[EscalateAnn, ...] = ()
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class BrsBlock:
    init: Union[str, Expr, None]
    classes: Tuple[Tuple[str, ...], ...]
    line: int = 0
    column: int = 0


Decl = Union[CtrlDecl, BigDef, ReactDef, BrsBlock]


@dataclass(frozen=True)
class ProgramAst:
    decls: Tuple[Decl, ...]

    @property
    def rules(self) -> List[ReactDef]:
        return [d for d in self.decls if isinstance(d, ReactDef)]

    @property
    def bigraphs(self) -> List[BigDef]:
        return [d for d in self.decls if isinstance(d, BigDef)]

    @property
    def controls(self) -> List[CtrlDecl]:
        return [d for d in self.decls if isinstance(d, CtrlDecl)]

    @property
    def brs(self) -> Optional[BrsBlock]:
        blocks = [d for d in self.decls if isinstance(d, BrsBlock)]
        return blocks[-1] if blocks else None


# -- parser ---------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.i = 0

    # token helpers

    def peek(self, offset=0) -> Optional[Token]:
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def at(self, kind: str, lexeme: str = None, offset=0) -> bool:
        t = self.peek(offset)
        return t is not None and t.kind == kind and (lexeme is None or t.lexeme == lexeme)

    def at_sym(self, *lexemes: str) -> bool:
        t = self.peek()
        return t is not None and t.kind == "symbol" and t.lexeme in lexemes

    def error(self, expected: str):
        t = self.peek()
        if t is None:
            last = self.tokens[-1] if self.tokens else None
            line, col = (last.line, last.column) if last else (1, 1)
            raise ParseError(expected, "end of input", line, col)
        raise ParseError(expected, f"{t.kind} {t.lexeme!r}", t.line, t.column)

    def expect(self, kind: str, lexeme: str = None, what: str = None) -> Token:
        if not self.at(kind, lexeme):
            self.error(what or (repr(lexeme) if lexeme else kind))
        t = self.tokens[self.i]
        self.i += 1
        return t

    def sym(self, lexeme: str) -> Token:
        return self.expect("symbol", lexeme)

    # declarations

    def program(self) -> ProgramAst:
        decls = []
        while self.peek() is not None:
            decls.append(self.decl())
        return ProgramAst(tuple(decls))

    def decl(self) -> Decl:
        t = self.peek()
        if self.at("keyword", "atomic") or self.at("keyword", "ctrl"):
            return self.ctrl_decl()
        if self.at("keyword", "big"):
            self.i += 1
            name = self.expect("ident", what="bigraph name")
            self.sym("=")
            e = self.expr()
            self.sym(";")
            return BigDef(name.lexeme, e, t.line, t.column)
        if self.at("keyword", "react"):
            return self.react_def()
        if self.at("keyword", "begin"):
            return self.brs_block()
        self.error("declaration")

    def ctrl_decl(self) -> CtrlDecl:
        t = self.peek()
        atomic = False
        if self.at("keyword", "atomic"):
            self.i += 1
            atomic = True
        self.expect("keyword", "ctrl")
        name = self.expect("ctrl-ident", what="control name")
        self.sym("=")
        arity = self.expect("integer", what="arity")
        self.sym(";")
        return CtrlDecl(name.lexeme, int(arity.lexeme), atomic, t.line, t.column)

    def react_def(self) -> ReactDef:
        t = self.expect("keyword", "react")
        name = self.expect("ident", what="rule name")
        self.sym("=")
        redex = self.expr()
        self.sym("-->")
        reactum = self.expr()
        anns = []
        while self.at_sym("@"):
            anns.append(self.annotation())
        self.sym(";")
        return ReactDef(name.lexeme, redex, reactum, tuple(anns), t.line, t.column)

    def annotation(self) -> EscalateAnn:
        self.sym("@")
        self.expect("ident", "escalate", what="'escalate'")
        self.sym("(")
        schema = self.dashed_ident("schema id")
        self.sym(";")
        fields = [self.field()]
        while self.at_sym(","):
            self.i += 1
            fields.append(self.field())
        self.sym(")")
        return EscalateAnn(schema, tuple(fields))

    def dashed_ident(self, what: str) -> str:
        parts = [self.expect("ident", what=what).lexeme]
        while self.at_sym("-") and (self.at("ident", offset=1) or self.at("integer", offset=1)):
            self.i += 1
            parts.append(self.tokens[self.i].lexeme)
            self.i += 1
        return "-".join(parts)

    def field(self) -> Tuple[str, SelectorAst]:
        name = self.expect("ident", what="field name").lexeme
        self.sym("=")
        kind = self.expect("ident", what="selector").lexeme
        arg = None
        if self.at_sym("("):
            self.i += 1
            arg = self.expect("ctrl-ident", what="control name").lexeme
            self.sym(")")
        return name, SelectorAst(kind, arg)

    def brs_block(self) -> BrsBlock:
        t = self.expect("keyword", "begin")
        self.expect("keyword", "brs")
        init = None
        classes: Tuple[Tuple[str, ...], ...] = ()
        while not self.at("keyword", "end"):
            if self.at("keyword", "init"):
                self.i += 1
                if self.at("ident") and self.at("symbol", ";", offset=1):
                    init = self.expect("ident").lexeme
                else:
                    init = self.expr()
                self.sym(";")
            elif self.at("keyword", "rules"):
                self.i += 1
                self.sym("=")
                self.sym("[")
                cls = [self.rule_class()]
                while self.at_sym(","):
                    self.i += 1
                    cls.append(self.rule_class())
                self.sym("]")
                self.sym(";")
                classes = tuple(cls)
            else:
                self.error("'init', 'rules' or 'end'")
        self.expect("keyword", "end")
        if self.at_sym(";"):
            self.i += 1
        return BrsBlock(init, classes, t.line, t.column)

    def rule_class(self) -> Tuple[str, ...]:
        self.sym("{")
        names = [self.expect("ident", what="rule name").lexeme]
        while self.at_sym(","):
            self.i += 1
            names.append(self.expect("ident", what="rule name").lexeme)
        self.sym("}")
        return tuple(names)

    # expressions

    def expr(self) -> Expr:
        left = self.closure()
        while self.at_sym("|", "||"):
            op = self.tokens[self.i].lexeme
            self.i += 1
            left = Par(op, left, self.closure())
        return left

    def closure(self) -> Expr:
        if self.at_sym("/"):
            self.i += 1
            name = self.expect("ident", what="link name").lexeme
            return Close(name, self.closure())
        return self.atom()

    def atom(self) -> Expr:
        t = self.peek()
        if t is None:
            self.error("expression")
        if t.kind == "ctrl-ident":
            self.i += 1
            names: Tuple[str, ...] = ()
            if self.at_sym("{"):
                self.i += 1
                ns = []
                if not self.at_sym("}"):
                    ns.append(self.expect("ident", what="link name").lexeme)
                    while self.at_sym(","):
                        self.i += 1
                        ns.append(self.expect("ident", what="link name").lexeme)
                self.sym("}")
                names = tuple(ns)
            body = None
            if self.at_sym("."):
                self.i += 1
                body = self.atom()
            return Ion(t.lexeme, names, body, t.line, t.column)
        if t.kind == "symbol" and t.lexeme == "(":
            self.i += 1
            if self.at_sym(")"):
                self.i += 1
                return Empty()
            e = self.expr()
            self.sym(")")
            return e
        if t.kind == "integer" and t.lexeme == "1":
            self.i += 1
            return Empty()
        if t.kind == "ident":
            self.i += 1
            return SiteRef(t.lexeme, t.line, t.column)
        self.error("expression")


def parse(tokens_or_source: Union[str, List[Token]]) -> ProgramAst:
    tokens = tokenize(tokens_or_source) if isinstance(tokens_or_source, str) else list(tokens_or_source)
    return _Parser(tokens).program()


def parse_expr(source: str) -> Expr:
    p = _Parser(tokenize(source))
    e = p.expr()
    if p.peek() is not None:
        p.error("end of expression")
    return e
