"""Command-line front end: ``fmc reduce|run|check|encode|fuzz``.

Exit codes: 0 success, 1 property violation / check failure / stuck run,
2 usage or parse error, 3 fuel (or unroll budget) exhausted.
"""

from __future__ import annotations

import argparse
import os
import sys

from .encodings import LambdaTypeError, encode_cbv, encode_cbv_term_type, parse_lambda
from .machine import Complete, OutOfFuel, format_state, initial, run
from .propkit import PROPERTIES, GenConfig, GenerationExhausted, run_campaign
from .reduction import FuelExhausted, normalize
from .syntax import ParseError, parse, parse_type, show
from .typesys import check, infer

OK, FAILED, USAGE, FUEL = 0, 1, 2, 3

GRAMMARS = r"""
terms (^ binds tightest, pop bodies extend right, ';' associates left):
  M ::= x | * | #name | [M].M | <x>.M | <x : T>.M
      | M ; j -> M | M ; M | M ^ j | ( M )
types (input vector printed top of stack first):
  T ::= V => V.j + ... + V.j        V ::= 1 | A A ...    A ::= ( T )
lambda source for `encode` (identifiers lowercase):
  term ::= app {handle #e x[:t] => term}
  app  ::= raise #e atom | atom atom ...
  atom ::= x | ( term ) | \x[:t]. term        t ::= o | t -> t
stacks (--stack) are comma-separated terms, bottom to top; contexts
(--context) are comma-separated x:T.
"""


def _source(arg: str) -> str:
    if os.path.isfile(arg):
        with open(arg) as f:
            return f.read()
    return arg


def _items(text: str):
    return [s.strip() for s in text.split(",") if s.strip()] if text else []


def _path(p):
    return "[%s]" % ",".join(str(i) for i in p)


def cmd_reduce(args, out):
    t = parse(_source(args.file))
    trace = [] if args.trace else None
    res = normalize(t, args.fuel, args.unroll, trace)
    for k, (path, rule, u) in enumerate(trace or (), 1):
        print("%d. %s at %s: %s" % (k, rule, _path(path), show(u)), file=out)
    print(show(res.term), file=out)
    if isinstance(res, FuelExhausted):
        why = "unroll budget" if res.frozen else "fuel"
        print("%s exhausted after %d steps" % (why, res.steps), file=sys.stderr)
        return FUEL
    return OK


def cmd_run(args, out):
    t = parse(_source(args.file))
    stack = [parse(s) for s in _items(args.stack)]
    res = run(initial(t, stack), args.fuel, trace=args.trace)
    for s in res.trace or ():
        print(format_state(s), file=out)
    o = res.outcome
    if isinstance(o, Complete):
        print("jump: %s" % o.jump, file=out)
        print("stack: %s" % (", ".join(show(a) for a in o.args) or "(empty)"), file=out)
        return OK
    if isinstance(o, OutOfFuel):
        print("out of fuel after %d steps" % o.steps, file=out)
        print("state: %s" % format_state(o.state), file=out)
        return FUEL
    print("stuck: %s" % o.reason, file=out)
    print("state: %s" % format_state(o.state), file=out)
    return FAILED


def cmd_check(args, out):
    t = parse(_source(args.file))
    ctx = {}
    for item in _items(args.context):
        name, sep, ty = item.partition(":")
        if not sep:
            raise ParseError(1, 1, {"x:T"}, repr(item))
        ctx[name.strip()] = parse_type(ty)
    if args.type is None:
        rep = infer(ctx, t)
    else:
        rep = check(ctx, t, parse_type(args.type))
    if not rep.ok:
        print("error: %s" % rep.error, file=out)
        return FAILED
    print("ok: %s" % rep.type, file=out)
    print(rep.outline(t), file=out)
    return OK


def cmd_encode(args, out):
    src = _source(args.file)
    t = parse_lambda(src)
    print(show(encode_cbv(t)), file=out)
    if args.types:
        try:
            print("type: %s" % encode_cbv_term_type(t), file=out)
        except LambdaTypeError as e:
            print("error: not simply typed: %s" % e, file=out)
            return FAILED
    return OK


def cmd_fuzz(args, out):
    cfg = GenConfig(seed=args.seed, max_size=args.size)
    try:
        rep = run_campaign(args.property, cfg, args.cases, args.fuel)
    except GenerationExhausted as e:
        print("error: %s" % e, file=sys.stderr)
        return USAGE
    print(rep.summary() if args.format == "summary" else rep.text(), file=out)
    return OK if rep.ok else FAILED


def build_parser():
    p = argparse.ArgumentParser(prog="fmc", description=__doc__.split("\n")[0],
                                epilog=GRAMMARS, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reduce", help="normalize a term (outermost-leftmost)")
    r.add_argument("file", help="source file, or the term itself")
    r.add_argument("--fuel", type=int, default=10000)
    r.add_argument("--unroll", type=int, default=8, help="unrolls allowed per loop")
    r.add_argument("--trace", action="store_true")
    r.set_defaults(func=cmd_reduce)

    m = sub.add_parser("run", help="run the stack machine")
    m.add_argument("file")
    m.add_argument("--stack", default="", help="initial stack, bottom to top")
    m.add_argument("--fuel", type=int, default=10000)
    m.add_argument("--trace", action="store_true")
    m.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="type-check (or infer without --type)")
    c.add_argument("file")
    c.add_argument("--type")
    c.add_argument("--context", default="")
    c.set_defaults(func=cmd_check)

    e = sub.add_parser("encode", help="translate a call-by-value lambda term")
    e.add_argument("file")
    e.add_argument("--from", dest="source", choices=["cbv"], default="cbv")
    e.add_argument("--types", action="store_true", help="also print the translated type")
    e.set_defaults(func=cmd_encode)

    f = sub.add_parser("fuzz", help="run a property campaign")
    f.add_argument("property", choices=sorted(PROPERTIES))
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--cases", type=int, default=1000)
    f.add_argument("--fuel", type=int, default=None, help="default depends on the property")
    f.add_argument("--size", type=int, default=30)
    f.add_argument("--format", choices=["text", "summary"], default="text")
    f.set_defaults(func=cmd_fuzz)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    p = build_parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    try:
        return args.func(args, out)
    except ParseError as e:
        print("parse error: %s" % e, file=sys.stderr)
        return USAGE
    except ValueError as e:
        print("error: %s" % e, file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
