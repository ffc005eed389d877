"""Command-line interface.

    mfj check file.mfj...
    mfj run file.mfj [--monad exc|list|dist|id] [--fuel N] [--prefix K]
                     [--approx N] [--trace] [--json] [--unchecked]
    mfj soundness file.mfj... [--monad M] [--interp forall|exists] ...
    mfj parse file.mfj...

Exit codes: 0 success, 1 check/soundness failure, 2 usage or precondition
error.  ``--no-prelude`` drops the standard prelude; the ``MFJ_PRELUDE``
environment variable substitutes a different one.
"""

from __future__ import annotations

import argparse
import json
import sys

from .evaluator import Diverged, Evaluator, PrefixExceeded, VRes
from .monads import Dist, ExcValue, IdValue, LazyList
from .parser import ParseError, parse_program, pretty, pretty_value
from .prelude import load_file
from .soundness import IllTypedProgram, SoundnessReport, check_soundness
from .typer import Checker


def _arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfj", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("files", nargs="+", help="source files (.mfj)")
        sp.add_argument("--monad", default="exc",
                        choices=["exc", "list", "dist", "id"])
        sp.add_argument("--fuel", type=int, default=10000)
        sp.add_argument("--prefix", type=int, default=256)
        sp.add_argument("--approx", type=int, default=None,
                        help="report the N-step approximation instead")
        sp.add_argument("--interp", choices=["forall", "exists"], default=None)
        sp.add_argument("--trace", action="store_true")
        sp.add_argument("--json", action="store_true")
        sp.add_argument("--unchecked", action="store_true",
                        help="skip the typechecker before running")
        sp.add_argument("--no-prelude", action="store_true")

    for name in ("check", "run", "soundness", "parse"):
        common(sub.add_parser(name))
    return p


def _load(path: str, use_prelude: bool):
    try:
        return load_file(path, use_prelude)
    except FileNotFoundError:
        print(f"mfj: no such file: {path}", file=sys.stderr)
        raise SystemExit(2)
    except ParseError as e:
        print(f"mfj: {path}: parse error: {e}", file=sys.stderr)
        raise SystemExit(1)


def render_result(mres, prefix: int) -> str:
    def res(r):
        return pretty_value(r.value) if isinstance(r, VRes) else "wrong"

    if isinstance(mres, ExcValue):
        if mres.tag == "pure":
            return res(mres.payload)
        if mres.tag == "raised":
            return f"raise {mres.payload}"
        return "bottom"
    if isinstance(mres, LazyList):
        head = [res(r) for r in mres.take(prefix)]
        more = "" if mres.exhausted_within(prefix) else ", ..."
        return "[" + ", ".join(head) + more + "]"
    if isinstance(mres, Dist):
        items = ", ".join(f"{res(v)}: {w}" for v, w in mres.weights)
        return "{" + items + "}"
    if isinstance(mres, IdValue):
        return "bottom" if mres.tag == "bottom" else res(mres.payload)
    return repr(mres)


def cmd_check(args) -> int:
    bad = 0
    out = []
    for path in args.files:
        prog = _load(path, not args.no_prelude)
        diags = Checker(prog).check_program()
        out.append({"file": path, "ok": not diags,
                    "diagnostics": [str(d) for d in diags]})
        if diags:
            bad += 1
            if not args.json:
                for d in diags:
                    print(f"{path}: {d}")
        elif not args.json:
            print(f"{path}: ok")
    if args.json:
        print(json.dumps(out, indent=2))
    return 1 if bad else 0


def cmd_run(args) -> int:
    if len(args.files) != 1:
        print("mfj run: expected exactly one file", file=sys.stderr)
        return 2
    prog = _load(args.files[0], not args.no_prelude)
    if prog.main is None:
        print("mfj run: program has no main expression", file=sys.stderr)
        return 2
    if not args.unchecked:
        diags = Checker(prog).check_program()
        if diags:
            for d in diags:
                print(f"{args.files[0]}: {d}", file=sys.stderr)
            print("mfj run: cannot run an ill-typed program "
                  "(use --unchecked to force)", file=sys.stderr)
            return 2
    ev = Evaluator(prog, args.monad, prefix=args.prefix)
    if args.approx is not None:
        mres = ev.approx(prog.main, args.approx)
        payload = {"approx": args.approx,
                   "result": render_result(mres, args.prefix)}
        print(json.dumps(payload) if args.json
              else f"approx[{args.approx}] = {payload['result']}")
        return 0
    trace = [] if args.trace else None
    try:
        mres = ev.finitary(prog.main, args.fuel, trace=trace)
    except Diverged:
        if trace:
            for i, line in enumerate(trace, 1):
                print(line.render(i))
        print(json.dumps({"diverged": True, "fuel": args.fuel})
              if args.json else f"diverged (fuel {args.fuel})")
        return 0
    except PrefixExceeded as e:
        print(f"mfj run: {e}", file=sys.stderr)
        return 2
    if trace:
        for i, line in enumerate(trace, 1):
            print(line.render(i))
    rendered = render_result(mres, args.prefix)
    print(json.dumps({"result": rendered}) if args.json else rendered)
    return 0


def cmd_soundness(args) -> int:
    report = SoundnessReport()
    for path in args.files:
        prog = _load(path, not args.no_prelude)
        if prog.main is None:
            print(f"mfj soundness: {path}: no main expression",
                  file=sys.stderr)
            return 2
        try:
            check_soundness(
                prog, args.monad, name=path, fuel=args.fuel,
                prefix=args.prefix, which=args.interp,
                approx_to=args.approx if args.approx is not None else 64,
                report=report,
            )
        except IllTypedProgram as e:
            print(f"mfj soundness: cannot check soundness of ill-typed "
                  f"program {path}: {e}", file=sys.stderr)
            return 2
    print(report.to_json() if args.json else report.summary())
    return 0 if report.ok else 1


def cmd_parse(args) -> int:
    for path in args.files:
        # parse the file alone (no prelude): the output should re-parse
        try:
            with open(path, encoding="utf-8") as f:
                prog = parse_program(f.read())
        except FileNotFoundError:
            print(f"mfj: no such file: {path}", file=sys.stderr)
            return 2
        except ParseError as e:
            print(f"mfj: {path}: parse error: {e}", file=sys.stderr)
            return 1
        print(pretty(prog), end="")
    return 0


def main(argv=None) -> int:
    args = _arg_parser().parse_args(argv)
    cmd = {"check": cmd_check, "run": cmd_run,
           "soundness": cmd_soundness, "parse": cmd_parse}[args.command]
    try:
        code = cmd(args)
    except SystemExit as e:
        code = e.code if isinstance(e.code, int) else 2
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
