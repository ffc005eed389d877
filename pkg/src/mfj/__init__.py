"""A reference toolchain for an effectful object-oriented calculus.

Parse ``.mfj`` programs, typecheck them with a type-and-effect system,
run them under pluggable monads, and dynamically check the soundness
theorems.
"""

import sys as _sys

# numerals are deeply right-nested objects; the default limit is too shallow
if _sys.getrecursionlimit() < 100000:
    _sys.setrecursionlimit(100000)

from .evaluator import Diverged, Evaluator
from .monads import MONADS, get_monad
from .parser import ParseError, parse_effect, parse_expr, parse_program, parse_type, pretty
from .prelude import load_file, load_program, prelude_program
from .signatures import SigError, Sigs
from .soundness import SoundnessReport, check_soundness, interp_law_suite
from .typer import Checker, TypecheckError

__all__ = [
    "Checker", "Diverged", "Evaluator", "MONADS", "ParseError", "SigError",
    "Sigs", "SoundnessReport", "TypecheckError", "check_soundness",
    "get_monad", "interp_law_suite", "load_file", "load_program",
    "parse_effect", "parse_expr", "parse_program", "parse_type", "pretty",
    "prelude_program",
]

__version__ = "0.1.0"
