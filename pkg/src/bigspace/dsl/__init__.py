"""The reaction-rule language: tokenizer, parser, elaborator and printer."""
from .elaborate import BrsDef, Program, bigraph_from_expr, elaborate, elaborate_expr, load_program
from .lexer import Token, tokenize
from .parser import ProgramAst, parse, parse_expr
from .printer import format_bigraph, pretty_print

__all__ = [
    "BrsDef", "Program", "ProgramAst", "Token",
    "bigraph_from_expr", "elaborate", "elaborate_expr", "format_bigraph",
    "load_program", "parse", "parse_expr", "pretty_print", "tokenize",
]
