"""Random generation of valid, semantically sane lifted STL formulas.

Generation works on a forest of placeholder leaves: the shuffled prop list
is split into sub-lists, operators are prepended to each sub-list until it
closes into a single subtree (binary operators reduce the open-subtree
count, unary ones do not), and the sub-trees are then assembled with
random binary operators.  Offensive shapes (consecutive negations, empty
intervals) are rejected and resampled.

The RNG is consulted in a fixed, documented order so that scripted random
sources can drive the generator through an exact decision sequence:

1. ``randint`` for the AP count, ``shuffle`` of the prop list,
   ``randint`` for the number of sub-lists, ``sample`` for split points.
2. Per sub-list, ``choice`` over all operator kinds while open subtrees
   remain (plus interval draws for temporal picks), then a ``random``
   coin per extra unary prepend followed by ``choice`` over unary kinds.
3. Per assembly join, ``choice`` over binary kinds (plus interval draws).

Temporal interval draws are: ``random`` coin against ``p_untimed``;
if timed, ``randint`` over ``bound_low_range`` for the lower bound, a
``random`` coin against ``p_infinite``, and if bounded a ``randint`` for
the upper bound.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .core import (
    Atom,
    Formula,
    Interval,
    Node,
    OpKind,
    Operator,
    TEMPORAL_KINDS,
    Violation,
    walk_with_path,
)

_ALL_KINDS = (
    OpKind.AND,
    OpKind.OR,
    OpKind.IMPLY,
    OpKind.EQUAL,
    OpKind.UNTIL,
    OpKind.NEGATION,
    OpKind.FINALLY,
    OpKind.GLOBALLY,
)
_UNARY = (OpKind.NEGATION, OpKind.FINALLY, OpKind.GLOBALLY)
_BINARY = (OpKind.AND, OpKind.OR, OpKind.IMPLY, OpKind.EQUAL, OpKind.UNTIL)


class ConfigInvalid(ValueError):
    pass


class ResampleBudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    max_aps: int = 5
    bound_low_range: tuple[int, int] = (0, 100)
    bound_high_range: tuple[int, int] = (1, 500)
    p_untimed: float = 0.5
    p_infinite: float = 0.2
    p_extra_unary: float = 0.3
    forbidden_patterns: tuple[str, ...] = (
        "no-consecutive-negation",
        "interval-strict-order",
    )
    seed: int = 0
    resample_cap: int = 100


def check_config(config: SynthConfig) -> None:
    if config.max_aps < 1:
        raise ConfigInvalid("max_aps must be >= 1")
    for name in ("p_untimed", "p_infinite", "p_extra_unary"):
        p = getattr(config, name)
        if not 0.0 <= p <= 1.0:
            raise ConfigInvalid(f"{name} must lie in [0, 1]")
    lo, hi = config.bound_low_range
    if lo > hi or lo < 0:
        raise ConfigInvalid("bound_low_range must be a non-empty non-negative range")
    blo, bhi = config.bound_high_range
    if blo > bhi:
        raise ConfigInvalid("bound_high_range must be non-empty")
    if bhi <= hi:
        raise ConfigInvalid("bound_high_range must extend past bound_low_range")
    for pattern in config.forbidden_patterns:
        if pattern not in SANITY_RULES:
            raise ConfigInvalid(f"unknown sanity rule {pattern!r}")
    if config.resample_cap < 1:
        raise ConfigInvalid("resample_cap must be >= 1")


def _draw_interval(config: SynthConfig, rng: random.Random) -> Interval | None:
    if rng.random() < config.p_untimed:
        return None
    lower = rng.randint(*config.bound_low_range)
    if rng.random() < config.p_infinite:
        return Interval(lower, None)
    hi_lo, hi_hi = config.bound_high_range
    upper = rng.randint(max(lower + 1, hi_lo), hi_hi)
    return Interval(lower, upper)


def _draw_operator(kind: OpKind, config: SynthConfig, rng: random.Random) -> Operator:
    if kind in TEMPORAL_KINDS:
        return Operator(kind, _draw_interval(config, rng))
    return Operator(kind)


def _grow_subtree(leaves: list[Formula], config: SynthConfig, rng: random.Random) -> Formula:
    forest = list(leaves)
    while len(forest) > 1:
        kind = rng.choice(_ALL_KINDS)
        op = _draw_operator(kind, config, rng)
        if op.arity == 2:
            forest[0:2] = [Node(op, (forest[0], forest[1]))]
        else:
            forest[0] = Node(op, (forest[0],))
    tree = forest[0]
    while rng.random() < config.p_extra_unary:
        kind = rng.choice(_UNARY)
        tree = Node(_draw_operator(kind, config, rng), (tree,))
    return tree


def _synthesize_raw(config: SynthConfig, rng: random.Random, ap_num: int) -> Formula:
    props: list[Formula] = [Atom(i) for i in range(1, ap_num + 1)]
    rng.shuffle(props)
    n_subs = rng.randint(1, ap_num)
    cuts = sorted(rng.sample(range(1, ap_num), n_subs - 1)) if n_subs > 1 else []
    bounds = [0] + cuts + [ap_num]
    subtrees = [
        _grow_subtree(props[a:b], config, rng) for a, b in zip(bounds, bounds[1:])
    ]
    tree = subtrees[0]
    for nxt in subtrees[1:]:
        kind = rng.choice(_BINARY)
        tree = Node(_draw_operator(kind, config, rng), (tree, nxt))
    return tree


def _draw_sane(config: SynthConfig, rng: random.Random) -> tuple[Formula, int]:
    # resampling keeps the AP draw so the delivered AP histogram stays uniform
    ap_num = rng.randint(1, config.max_aps)
    rejections = 0
    for _ in range(config.resample_cap):
        f = _synthesize_raw(config, rng, ap_num)
        if not sanity_check(f, config.forbidden_patterns):
            return f, rejections
        rejections += 1
    raise ResampleBudgetExhausted(
        f"no sane formula within {config.resample_cap} draws"
    )


def synthesize(config: SynthConfig, rng: random.Random | None = None) -> Formula:
    """One random formula passing both validation and the sanity rules."""
    check_config(config)
    if rng is None:
        rng = random.Random(config.seed)
    f, _ = _draw_sane(config, rng)
    return f


def _rule_no_consecutive_negation(f: Formula) -> list[Violation]:
    out = []
    for path, node in walk_with_path(f):
        if (
            isinstance(node, Node)
            and node.op.kind is OpKind.NEGATION
            and node.children
            and isinstance(node.children[0], Node)
            and node.children[0].op.kind is OpKind.NEGATION
        ):
            out.append(
                Violation(path, "no-consecutive-negation", "negation directly under negation")
            )
    return out


def _rule_interval_strict_order(f: Formula) -> list[Violation]:
    out = []
    for path, node in walk_with_path(f):
        if isinstance(node, Node) and node.op.interval is not None:
            iv = node.op.interval
            if iv.bounded and iv.lower >= iv.upper:  # type: ignore[operator]
                out.append(
                    Violation(
                        path,
                        "interval-strict-order",
                        f"interval [{iv.lower},{iv.upper}] is empty or reversed",
                    )
                )
    return out


SANITY_RULES = {
    "no-consecutive-negation": _rule_no_consecutive_negation,
    "interval-strict-order": _rule_interval_strict_order,
}


def sanity_check(
    f: Formula, patterns: tuple[str, ...] | None = None
) -> list[Violation]:
    """Flag semantically unreasonable shapes; rules are registry-extensible."""
    if patterns is None:
        patterns = tuple(SANITY_RULES)
    out: list[Violation] = []
    for name in patterns:
        try:
            rule = SANITY_RULES[name]
        except KeyError:
            raise ConfigInvalid(f"unknown sanity rule {name!r}") from None
        out.extend(rule(f))
    return out


@dataclass
class BatchReport:
    requested: int
    produced: int = 0
    rejected: int = 0
    seeds: dict = field(default_factory=dict)


def synthesize_batch(config: SynthConfig, count: int) -> tuple[list[Formula], BatchReport]:
    """Deterministic batch; sanity failures are resampled up to the cap."""
    check_config(config)
    if count < 1:
        raise ConfigInvalid("count must be >= 1")
    rng = random.Random(config.seed)
    report = BatchReport(requested=count)
    out: list[Formula] = []
    for _ in range(count):
        f, rejections = _draw_sane(config, rng)
        report.rejected += rejections
        out.append(f)
    report.produced = len(out)
    return out, report
