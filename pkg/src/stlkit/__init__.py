"""stlkit: lifted signal-temporal-logic tooling."""

from .core import (
    Atom,
    Formula,
    Interval,
    InvalidFormula,
    Node,
    OpKind,
    Operator,
    Violation,
    ap,
    ap_count,
    and_,
    desugar,
    equal,
    finally_,
    globally,
    imply,
    neg,
    op_count,
    or_,
    prop,
    tree_equal,
    until,
    validate,
)
from .syntax import (
    ALL_FORMATS,
    FormatSpec,
    IN_SYMBOL,
    IN_WORD,
    PRE_SYMBOL,
    PRE_WORD,
    ParseError,
    Unrepairable,
    convert,
    linearize,
    parse,
    repair,
)
from .synthesis import SynthConfig, sanity_check, synthesize, synthesize_batch

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
