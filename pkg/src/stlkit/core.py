"""Immutable abstract syntax for signal temporal logic formulas.

A formula is a tree whose leaves are atoms (either ``prop_i`` placeholders
or opaque grounded text payloads) and whose internal nodes carry an
operator, possibly with an integer time interval.  Everything here is a
pure function over frozen values.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator, Union


class OpKind(enum.Enum):
    NEGATION = "negation"
    AND = "and"
    OR = "or"
    IMPLY = "imply"
    EQUAL = "equal"
    FINALLY = "finally"
    GLOBALLY = "globally"
    UNTIL = "until"


UNARY_KINDS = frozenset({OpKind.NEGATION, OpKind.FINALLY, OpKind.GLOBALLY})
BINARY_KINDS = frozenset(
    {OpKind.AND, OpKind.OR, OpKind.IMPLY, OpKind.EQUAL, OpKind.UNTIL}
)
TEMPORAL_KINDS = frozenset({OpKind.FINALLY, OpKind.GLOBALLY, OpKind.UNTIL})

PLACEHOLDER_RE = re.compile(r"prop_(\d+)")


@dataclass(frozen=True)
class Interval:
    """Time bounds ``[lower, upper]``; ``upper=None`` means unbounded."""

    lower: int
    upper: int | None = None

    @property
    def bounded(self) -> bool:
        return self.upper is not None

    def render(self) -> str:
        upper = "infinite" if self.upper is None else str(self.upper)
        return f"[{self.lower},{upper}]"


@dataclass(frozen=True)
class Operator:
    kind: OpKind
    interval: Interval | None = None

    @property
    def arity(self) -> int:
        return 1 if self.kind in UNARY_KINDS else 2


@dataclass(frozen=True)
class Atom:
    """Leaf atom: an ``int`` label is a placeholder index, ``str`` is grounded text."""

    label: int | str

    @property
    def is_placeholder(self) -> bool:
        return isinstance(self.label, int)

    def text(self) -> str:
        if self.is_placeholder:
            return f"prop_{self.label}"
        return self.label  # type: ignore[return-value]


@dataclass(frozen=True)
class Node:
    op: Operator
    children: tuple["Formula", ...]


Formula = Union[Atom, Node]


def prop(index: int) -> Atom:
    return Atom(index)


def ap(payload: str) -> Atom:
    """Grounded atom; ``prop_i``-shaped payloads become placeholders."""
    m = PLACEHOLDER_RE.fullmatch(payload)
    if m:
        return Atom(int(m.group(1)))
    return Atom(payload)


def neg(f: Formula) -> Node:
    return Node(Operator(OpKind.NEGATION), (f,))


def and_(a: Formula, b: Formula) -> Node:
    return Node(Operator(OpKind.AND), (a, b))


def or_(a: Formula, b: Formula) -> Node:
    return Node(Operator(OpKind.OR), (a, b))


def imply(a: Formula, b: Formula) -> Node:
    return Node(Operator(OpKind.IMPLY), (a, b))


def equal(a: Formula, b: Formula) -> Node:
    return Node(Operator(OpKind.EQUAL), (a, b))


def finally_(f: Formula, interval: Interval | None = None) -> Node:
    return Node(Operator(OpKind.FINALLY, interval), (f,))


def globally(f: Formula, interval: Interval | None = None) -> Node:
    return Node(Operator(OpKind.GLOBALLY, interval), (f,))


def until(a: Formula, b: Formula, interval: Interval | None = None) -> Node:
    return Node(Operator(OpKind.UNTIL, interval), (a, b))


def walk(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal."""
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Node):
            stack.extend(reversed(node.children))


def walk_with_path(f: Formula) -> Iterator[tuple[tuple[int, ...], Formula]]:
    stack: list[tuple[tuple[int, ...], Formula]] = [((), f)]
    while stack:
        path, node = stack.pop()
        yield path, node
        if isinstance(node, Node):
            for i, child in reversed(list(enumerate(node.children))):
                stack.append((path + (i,), child))


def atoms(f: Formula) -> list[Atom]:
    return [n for n in walk(f) if isinstance(n, Atom)]


def ap_count(f: Formula) -> int:
    return sum(1 for n in walk(f) if isinstance(n, Atom))


def op_count(f: Formula) -> int:
    return sum(1 for n in walk(f) if isinstance(n, Node))


def placeholder_indices(f: Formula) -> set[int]:
    return {a.label for a in atoms(f) if a.is_placeholder}  # type: ignore[misc]


@dataclass(frozen=True)
class Violation:
    path: tuple[int, ...]
    rule: str
    message: str

    def __str__(self) -> str:
        where = ".".join(str(i) for i in self.path) or "root"
        return f"{self.rule} at {where}: {self.message}"


class InvalidFormula(ValueError):
    def __init__(self, violations: list[Violation]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


def _balanced(text: str) -> bool:
    depth = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def validate(f: Formula) -> list[Violation]:
    """Structural well-formedness check.  Violations are data, not failures."""
    out: list[Violation] = []
    for path, node in walk_with_path(f):
        if isinstance(node, Atom):
            if node.is_placeholder:
                if node.label < 1:  # type: ignore[operator]
                    out.append(
                        Violation(path, "atom-index", "placeholder index must be >= 1")
                    )
            else:
                payload = str(node.label)
                if not payload.strip():
                    out.append(Violation(path, "atom-payload", "empty payload"))
                elif not _balanced(payload):
                    out.append(
                        Violation(path, "atom-payload", "unbalanced parentheses in payload")
                    )
            continue
        op = node.op
        if len(node.children) != op.arity:
            out.append(
                Violation(
                    path,
                    "arity",
                    f"{op.kind.value} expects {op.arity} children, got {len(node.children)}",
                )
            )
        if op.interval is not None:
            if op.kind not in TEMPORAL_KINDS:
                out.append(
                    Violation(path, "interval-scope", f"{op.kind.value} cannot carry an interval")
                )
            iv = op.interval
            if iv.lower < 0:
                out.append(Violation(path, "interval-bounds", "lower bound must be >= 0"))
            if iv.bounded and iv.upper < iv.lower:  # type: ignore[operator]
                out.append(
                    Violation(
                        path, "interval-order", f"lower {iv.lower} exceeds upper {iv.upper}"
                    )
                )
    return out


def _require_valid(f: Formula) -> None:
    violations = validate(f)
    if violations:
        raise InvalidFormula(violations)


def desugar(f: Formula) -> Formula:
    """Rewrite imply/equal into the negation/or/and base syntax."""
    _require_valid(f)
    return _desugar(f)


def _desugar(f: Formula) -> Formula:
    if isinstance(f, Atom):
        return f
    kids = tuple(_desugar(c) for c in f.children)
    kind = f.op.kind
    if kind is OpKind.IMPLY:
        return or_(neg(kids[0]), kids[1])
    if kind is OpKind.EQUAL:
        a, b = kids
        return and_(or_(neg(a), b), or_(neg(b), a))
    return Node(f.op, kids)


def _norm_payload(label: int | str) -> int | str:
    if isinstance(label, int):
        return label
    return " ".join(label.split())


def tree_equal(a: Formula, b: Formula) -> bool:
    """Exact structural equality, with grounded payload whitespace collapsed.

    Deliberately no commutativity or double-negation rewriting: accuracy
    scoring treats the surface tree as the unit of correctness.
    """
    if isinstance(a, Atom) and isinstance(b, Atom):
        return _norm_payload(a.label) == _norm_payload(b.label)
    if isinstance(a, Node) and isinstance(b, Node):
        if a.op != b.op or len(a.children) != len(b.children):
            return False
        return all(tree_equal(x, y) for x, y in zip(a.children, b.children))
    return False


def first_divergence(a: Formula, b: Formula) -> tuple[int, ...] | None:
    """Path of the first pre-order position where the trees differ."""
    if isinstance(a, Atom) and isinstance(b, Atom):
        return None if _norm_payload(a.label) == _norm_payload(b.label) else ()
    if isinstance(a, Node) and isinstance(b, Node):
        if a.op != b.op or len(a.children) != len(b.children):
            return ()
        for i, (x, y) in enumerate(zip(a.children, b.children)):
            sub = first_divergence(x, y)
            if sub is not None:
                return (i,) + sub
        return None
    return ()
