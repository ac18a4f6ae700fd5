"""Command-line entry point.

Exit status: 0 success, 1 domain error, 2 usage error (bad arguments,
missing files, unknown names).  Standard output carries only the
machine-readable result; diagnostics and the version banner go to
standard error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .bigraph import Bigraph, canonical_dumps, validate
from .dot import export_dot
from .dsl import Program, load_program
from .errors import BigraphError
from .matching import find_occurrences
from .rewriting import run
from .sim import load_scenario, run_sim, verify_chain
from .spatial import ScanDocument, ingest_scan, name_table

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _read(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    return p.read_text()


def _program(path: str) -> Program:
    return load_program(_read(path))


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _pick_bigraph(prog: Program, name: Optional[str], what: str) -> Bigraph:
    if name is None:
        if prog.brs is not None:
            return prog.brs.init
        if len(prog.bigraphs) == 1:
            return next(iter(prog.bigraphs.values()))
        raise UsageError(f"choose a bigraph with {what}")
    if name == "init":
        if prog.brs is None:
            raise UsageError("program has no brs block, so no init")
        return prog.brs.init
    if name not in prog.bigraphs:
        raise UsageError(f"unknown bigraph {name}")
    return prog.bigraphs[name]


def _plural(n: int, word: str) -> str:
    return f"{n} {word}" if n == 1 else f"{n} {word}s"


# -- subcommands ----------------------------------------------------------------

def cmd_check(args) -> int:
    prog = _program(args.model)
    for name, b in prog.bigraphs.items():
        problems = validate(b)
        if problems:
            raise BigraphError(f"bigraph {name}: {problems[0]}")
    for rule in prog.rules.values():
        rule.check()
    print(f"{_plural(len(prog.rules), 'rule')}, {_plural(len(prog.bigraphs), 'bigraph')}")
    return EXIT_OK


def cmd_match(args) -> int:
    prog = _program(args.model)
    if args.redex not in prog.rules:
        raise UsageError(f"unknown rule {args.redex}")
    agent = _pick_bigraph(prog, args.agent, "--agent")
    occs = find_occurrences(agent, prog.rules[args.redex].redex)
    print(len(occs))
    for occ in occs:
        print(canonical_dumps(occ.to_json()))
    return EXIT_OK


def cmd_run(args) -> int:
    prog = _program(args.model)
    if args.max_steps < 0:
        raise UsageError("--max-steps must be non-negative")
    trace = run(prog.brs_spec(), args.max_steps)
    _write(args.trace, trace.to_jsonl())
    if args.final:
        _write(args.final, canonical_dumps(trace.final.to_json()) + "\n")
    if args.trace not in (None, "-"):
        print(trace.final_hash)
    return EXIT_OK


def cmd_names(args) -> int:
    try:
        doc = ScanDocument.from_json(json.loads(_read(args.scan)))
    except json.JSONDecodeError as exc:
        raise BigraphError(f"{args.scan}: line {exc.lineno}: {exc.msg}") from None
    except (KeyError, TypeError) as exc:
        raise BigraphError(f"{args.scan}: malformed scan ({exc})") from None
    sig = _program(args.model).signature if args.model else None
    b = ingest_scan(doc, sig)
    for name, node in name_table(b):
        print(f"{name}\t{node}" if args.ids else name)
    return EXIT_OK


def cmd_simulate(args) -> int:
    state = load_scenario(args.scenario)
    trace = run_sim(state, args.rounds)
    trace_path, audit_path = trace.write(args.out)
    if not verify_chain(trace.audit):
        raise BigraphError("audit chain does not verify")
    rejected = len(trace.events("message-rejected"))
    print(trace.final_hash)
    _note(args, f"{_plural(len(trace.rounds), 'round')}, {_plural(len(trace.messages), 'message')}, "
                f"{rejected} rejected; wrote {trace_path} and {audit_path}")
    return EXIT_OK


def cmd_export_dot(args) -> int:
    src = args.input
    if src.endswith(".json"):
        try:
            b = Bigraph.from_json(json.loads(_read(src)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise BigraphError(f"{src}: not a bigraph document ({exc})") from None
    else:
        b = _pick_bigraph(_program(src), args.bigraph, "--bigraph")
    problems = validate(b)
    if problems:
        raise BigraphError(f"{src}: {problems[0]}")
    _write(args.output, export_dot(b))
    return EXIT_OK


# -- plumbing ---------------------------------------------------------------------

def _note(args, text: str) -> None:
    if not args.quiet:
        print(text, file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bigspace", description="Bigraph models of spatial policies.")
    p.add_argument("--quiet", action="store_true", help="suppress diagnostics on success")
    p.add_argument("--version", action="store_true", help="print the version to standard error")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("check", help="parse and validate a model")
    s.add_argument("model")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("match", help="list occurrences of a rule's redex")
    s.add_argument("model")
    s.add_argument("--agent", help="named bigraph to search (default: brs init)")
    s.add_argument("--redex", required=True, help="rule whose redex to match")
    s.set_defaults(func=cmd_match)

    s = sub.add_parser("run", help="run the brs block")
    s.add_argument("model")
    s.add_argument("--max-steps", type=int, default=1000)
    s.add_argument("--trace", help="trace file (default: standard output)")
    s.add_argument("--final", help="write the final state as JSON")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("names", help="spatial name table of a scan")
    s.add_argument("scan")
    s.add_argument("--model", help="model whose controls the scan must use")
    s.add_argument("--ids", action="store_true", help="append node ids")
    s.set_defaults(func=cmd_names)

    s = sub.add_parser("simulate", help="run a scenario bundle")
    s.add_argument("scenario")
    s.add_argument("--out", required=True, help="directory for trace.jsonl and audit.jsonl")
    s.add_argument("--rounds", type=int, help="override the scenario's round count")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("export-dot", help="render a bigraph as DOT")
    s.add_argument("input", help="a .big model or a bigraph .json (e.g. from run --final)")
    s.add_argument("--bigraph", help="named bigraph in the model (default: brs init)")
    s.add_argument("--output", help="output file (default: standard output)")
    s.set_defaults(func=cmd_export_dot)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        print(f"bigspace {__version__}", file=sys.stderr)
        if args.command is None:
            return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError) as exc:
        print(f"bigspace: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BigraphError as exc:
        print(f"bigspace: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
