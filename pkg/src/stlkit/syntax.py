"""Bidirectional conversion between formula trees and four linear text formats.

The formats are the cross product of traversal order (pre-order or
in-order) and operator style (English words or symbols).  Pre-order text
carries no parentheses; in-order text parenthesizes every binary
application.  ``negation`` is spelled out in both styles.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .core import (
    Atom,
    Formula,
    Interval,
    InvalidFormula,
    Node,
    OpKind,
    Operator,
    PLACEHOLDER_RE,
    TEMPORAL_KINDS,
    validate,
)


class Order(enum.Enum):
    PRE_ORDER = "preorder"
    IN_ORDER = "inorder"


class OpStyle(enum.Enum):
    WORD = "word"
    SYMBOL = "symbol"


@dataclass(frozen=True)
class FormatSpec:
    order: Order
    style: OpStyle

    @property
    def id(self) -> str:
        """CLI-facing identifier, e.g. ``preorder-symbol``."""
        return f"{self.order.value}-{self.style.value}"

    @property
    def key(self) -> str:
        """JSON-facing identifier, e.g. ``preorder_symbol``."""
        return f"{self.order.value}_{self.style.value}"

    @classmethod
    def from_id(cls, text: str) -> "FormatSpec":
        normalized = text.strip().lower().replace("_", "-")
        for fmt in ALL_FORMATS:
            if fmt.id == normalized:
                return fmt
        valid = ", ".join(f.id for f in ALL_FORMATS)
        raise ValueError(f"unknown format {text!r} (expected one of: {valid})")


PRE_SYMBOL = FormatSpec(Order.PRE_ORDER, OpStyle.SYMBOL)
PRE_WORD = FormatSpec(Order.PRE_ORDER, OpStyle.WORD)
IN_SYMBOL = FormatSpec(Order.IN_ORDER, OpStyle.SYMBOL)
IN_WORD = FormatSpec(Order.IN_ORDER, OpStyle.WORD)
ALL_FORMATS = (PRE_SYMBOL, PRE_WORD, IN_SYMBOL, IN_WORD)

WORD_OPS = {
    "negation": OpKind.NEGATION,
    "and": OpKind.AND,
    "or": OpKind.OR,
    "imply": OpKind.IMPLY,
    "equal": OpKind.EQUAL,
    "finally": OpKind.FINALLY,
    "globally": OpKind.GLOBALLY,
    "until": OpKind.UNTIL,
}
SYMBOL_OPS = {
    "negation": OpKind.NEGATION,
    "&": OpKind.AND,
    "|": OpKind.OR,
    "->": OpKind.IMPLY,
    "<->": OpKind.EQUAL,
    "F": OpKind.FINALLY,
    "G": OpKind.GLOBALLY,
    "U": OpKind.UNTIL,
}
_WORD_TOKENS = {kind: tok for tok, kind in WORD_OPS.items()}
_SYMBOL_TOKENS = {kind: tok for tok, kind in SYMBOL_OPS.items()}

_INTERVAL_RE = re.compile(r"\[(\d+),(\d+|infinite)\]")
_TIMED_TOKEN_RE = re.compile(r"(.+?)\[(\d+),(\d+|infinite)\]")


class ParseError(ValueError):
    """Base for syntax errors; ``position`` is a 0-based token index."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (token {position})")
        self.position = position


class UnbalancedParentheses(ParseError):
    pass


class UnknownToken(ParseError):
    pass


class ArityMismatch(ParseError):
    pass


class DanglingTokens(ParseError):
    pass


class Unrepairable(ValueError):
    def __init__(self, original: ParseError):
        super().__init__(f"repair rules could not fix input: {original}")
        self.original = original
        self.repaired = False


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def _op_token(op: Operator, style: OpStyle) -> str:
    table = _WORD_TOKENS if style is OpStyle.WORD else _SYMBOL_TOKENS
    token = table[op.kind]
    if op.interval is not None:
        token += op.interval.render()
    return token


def linearize(f: Formula, fmt: FormatSpec) -> str:
    """Deterministic rendering of a valid formula in the given format."""
    violations = validate(f)
    if violations:
        raise InvalidFormula(violations)
    if fmt.order is Order.PRE_ORDER:
        return " ".join(_pre_tokens(f, fmt.style))
    return _in_text(f, fmt.style)


def _pre_tokens(f: Formula, style: OpStyle) -> list[str]:
    if isinstance(f, Atom):
        return [f.text()]
    out = [_op_token(f.op, style)]
    for child in f.children:
        out.extend(_pre_tokens(child, style))
    return out


def _in_text(f: Formula, style: OpStyle) -> str:
    if isinstance(f, Atom):
        return f.text()
    if f.op.arity == 1:
        return f"{_op_token(f.op, style)} {_in_text(f.children[0], style)}"
    left, right = f.children
    return f"({_in_text(left, style)} {_op_token(f.op, style)} {_in_text(right, style)})"


def tokenize(text: str) -> list[tuple[str, int]]:
    """Split into (token, index) pairs; parentheses are standalone tokens."""
    spaced = text.replace("(", " ( ").replace(")", " ) ")
    return [(tok, i) for i, tok in enumerate(spaced.split())]


def _lookup_op(token: str, style: OpStyle) -> Operator | None:
    table = WORD_OPS if style is OpStyle.WORD else SYMBOL_OPS
    if token in table:
        return Operator(table[token])
    m = _TIMED_TOKEN_RE.fullmatch(token)
    if m and m.group(1) in table:
        kind = table[m.group(1)]
        upper = None if m.group(3) == "infinite" else int(m.group(3))
        return Operator(kind, Interval(int(m.group(2)), upper))
    return None


def _other_style(style: OpStyle) -> OpStyle:
    return OpStyle.SYMBOL if style is OpStyle.WORD else OpStyle.WORD


def _classify(token: str, pos: int, style: OpStyle) -> Operator | None:
    """Operator for the token, None for an atom token, raise on misuse."""
    op = _lookup_op(token, style)
    if op is not None:
        if op.interval is not None and op.kind not in TEMPORAL_KINDS:
            raise UnknownToken(f"{token!r}: only temporal operators take intervals", pos)
        return op
    if _lookup_op(token, _other_style(style)) is not None:
        raise UnknownToken(f"{token!r} belongs to the other operator style", pos)
    if "[" in token and token.split("[", 1)[0] in (WORD_OPS.keys() | SYMBOL_OPS.keys()):
        # e.g. "finally[55," from whitespace inside the brackets
        raise UnknownToken(f"{token!r}: malformed interval suffix", pos)
    return None


def _merge_detached_intervals(
    tokens: list[tuple[str, int]], style: OpStyle
) -> list[tuple[str, int]]:
    """Accept ``globally [0,34]`` style input by gluing the interval on."""
    out: list[tuple[str, int]] = []
    for token, pos in tokens:
        if _INTERVAL_RE.fullmatch(token):
            if out:
                prev, prev_pos = out[-1]
                prev_op = _lookup_op(prev, style)
                if (
                    prev_op is not None
                    and prev_op.interval is None
                    and prev_op.kind in TEMPORAL_KINDS
                ):
                    out[-1] = (prev + token, prev_pos)
                    continue
            raise UnknownToken(f"interval {token!r} is not attached to a temporal operator", pos)
        out.append((token, pos))
    return out


def _atom_from_token(token: str) -> Atom:
    m = PLACEHOLDER_RE.fullmatch(token)
    if m:
        return Atom(int(m.group(1)))
    return Atom(token)


def parse(text: str, fmt: FormatSpec) -> Formula:
    """Inverse of ``linearize``: ``parse(linearize(f, fmt), fmt)`` equals ``f``.

    In-order input must be fully parenthesized, except that a single
    top-level binary application may omit its outer parentheses.  Runs of
    adjacent non-operator tokens in in-order input join into one grounded
    atom payload.
    """
    tokens = tokenize(text)
    if not tokens:
        raise ArityMismatch("empty input", 0)
    if fmt.order is Order.PRE_ORDER:
        for token, pos in tokens:
            if token in ("(", ")"):
                raise UnknownToken("parentheses are not part of pre-order syntax", pos)
        tokens = _merge_detached_intervals(tokens, fmt.style)
        return _parse_pre(tokens, fmt.style)
    _check_balance(tokens)
    tokens = _merge_detached_intervals(tokens, fmt.style)
    return _parse_in(tokens, fmt.style)


def _check_balance(tokens: list[tuple[str, int]]) -> None:
    depth = 0
    for token, pos in tokens:
        if token == "(":
            depth += 1
        elif token == ")":
            depth -= 1
            if depth < 0:
                raise UnbalancedParentheses("unexpected closing parenthesis", pos)
    if depth != 0:
        last = tokens[-1][1] if tokens else 0
        raise UnbalancedParentheses(f"{depth} unclosed parenthesis(es)", last)


def _parse_pre(tokens: list[tuple[str, int]], style: OpStyle) -> Formula:
    def rec(i: int) -> tuple[Formula, int]:
        if i >= len(tokens):
            pos = tokens[-1][1] + 1 if tokens else 0
            raise ArityMismatch("unexpected end of input, operand expected", pos)
        token, pos = tokens[i]
        op = _classify(token, pos, style)
        if op is None:
            return _atom_from_token(token), i + 1
        children = []
        j = i + 1
        for _ in range(op.arity):
            child, j = rec(j)
            children.append(child)
        return Node(op, tuple(children)), j

    root, end = rec(0)
    if end != len(tokens):
        raise DanglingTokens(f"unconsumed input starting at {tokens[end][0]!r}", tokens[end][1])
    return root


def _parse_in(tokens: list[tuple[str, int]], style: OpStyle) -> Formula:
    def at_end(i: int) -> int:
        return tokens[-1][1] + 1 if tokens else 0

    def operand(i: int) -> tuple[Formula, int]:
        if i >= len(tokens):
            raise ArityMismatch("unexpected end of input, operand expected", at_end(i))
        token, pos = tokens[i]
        if token == ")":
            raise ArityMismatch("operand expected before closing parenthesis", pos)
        if token == "(":
            inner, j = operand(i + 1)
            if j < len(tokens) and tokens[j][0] == ")":
                return inner, j + 1  # redundant grouping
            node, j = binary_tail(inner, j)
            if j >= len(tokens) or tokens[j][0] != ")":
                where = tokens[j][1] if j < len(tokens) else at_end(j)
                raise ArityMismatch("expected closing parenthesis", where)
            return node, j + 1
        op = _classify(token, pos, style)
        if op is None:
            return atom_run(i)
        if op.arity != 1:
            raise ArityMismatch(f"binary operator {token!r} lacks a left operand", pos)
        child, j = operand(i + 1)
        return Node(op, (child,)), j

    def atom_run(i: int) -> tuple[Formula, int]:
        words = []
        j = i
        while j < len(tokens):
            token, pos = tokens[j]
            if token in ("(", ")") or _classify(token, pos, style) is not None:
                break
            words.append(token)
            j += 1
        return _atom_from_token(" ".join(words)), j

    def binary_tail(left: Formula, i: int) -> tuple[Formula, int]:
        if i >= len(tokens):
            raise ArityMismatch("binary operator expected", at_end(i))
        token, pos = tokens[i]
        op = _classify(token, pos, style)
        if op is None:
            raise DanglingTokens(f"unconsumed input starting at {token!r}", pos)
        if op.arity != 2:
            raise ArityMismatch(f"binary operator expected, got {token!r}", pos)
        right, j = operand(i + 1)
        return Node(op, (left, right)), j

    root, i = operand(0)
    if i < len(tokens):
        # single top-level binary application may omit outer parentheses
        root, i = binary_tail(root, i)
    if i != len(tokens):
        raise DanglingTokens(f"unconsumed input starting at {tokens[i][0]!r}", tokens[i][1])
    return root


def convert(text: str, from_fmt: FormatSpec, to_fmt: FormatSpec) -> str:
    return linearize(parse(text, from_fmt), to_fmt)


def repair(text: str, fmt: FormatSpec) -> str:
    """Bounded rule-based fixup of almost-valid text.

    Rules: collapse duplicate whitespace, strip trailing unmatched closers,
    append missing closers at the end.  Token identity is never altered.
    Returns the input unchanged when it already parses.
    """
    try:
        parse(text, fmt)
        return text
    except ParseError as original:
        candidate = normalize_ws(text)
        candidate = _strip_trailing_closers(candidate)
        deficit = candidate.count("(") - candidate.count(")")
        if deficit > 0:
            candidate = candidate + ")" * deficit
        try:
            parse(candidate, fmt)
            return candidate
        except ParseError:
            raise Unrepairable(original) from original


def _strip_trailing_closers(text: str) -> str:
    excess = text.count(")") - text.count("(")
    out = text
    while excess > 0 and out.rstrip().endswith(")"):
        out = out.rstrip()[:-1].rstrip()
        excess -= 1
    return out
