"""Binary-accuracy scoring, accuracy-by-AP-count breakdowns, corpus statistics.

A prediction counts only if its parsed tree exactly matches the gold tree
(after rule-based repair of the prediction text); there is no partial
credit.  Sentence statistics tokenize by lowercased whitespace splitting,
counting pre-tokenized punctuation as words.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .core import Formula, ap_count, first_divergence, op_count, tree_equal
from .syntax import ALL_FORMATS, FormatSpec, IN_WORD, ParseError, Unrepairable, parse, repair


class GoldUnparseable(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass
class ScoreVerdict:
    correct: bool
    gold_ap_count: int
    reason: str | None = None
    diverge_path: str | None = None

    def to_json(self) -> dict:
        return {
            "correct": self.correct,
            "gold_ap_count": self.gold_ap_count,
            "reason": self.reason,
            "diverge_path": self.diverge_path,
        }


def _path_str(path: tuple[int, ...]) -> str:
    return "root" + "".join(f".{i}" for i in path)


def score(pred: str, gold: str, fmt: FormatSpec = IN_WORD) -> ScoreVerdict:
    """Binary verdict; unparseable predictions are incorrect, not errors."""
    try:
        gold_formula = parse(gold, fmt)
    except ParseError as exc:
        raise GoldUnparseable(f"gold does not parse: {exc}") from exc
    aps = ap_count(gold_formula)
    try:
        pred_formula = parse(repair(pred, fmt), fmt)
    except (Unrepairable, ParseError):
        return ScoreVerdict(False, aps, reason="parse_failure", diverge_path=None)
    if tree_equal(pred_formula, gold_formula):
        return ScoreVerdict(True, aps)
    diverged = first_divergence(pred_formula, gold_formula)
    return ScoreVerdict(
        False,
        aps,
        reason="mismatch",
        diverge_path=_path_str(diverged if diverged is not None else ()),
    )


@dataclass
class EvalReport:
    total: int
    correct: int
    verdicts: list[ScoreVerdict] = field(default_factory=list)
    breakdown: dict[int, tuple[int, int]] = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return self.correct / self.total

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "breakdown": {
                str(k): {"total": t, "correct": c}
                for k, (t, c) in sorted(self.breakdown.items())
            },
            "verdicts": [v.to_json() for v in self.verdicts],
        }

    def to_table(self) -> str:
        lines = [
            f"total    {self.total}",
            f"correct  {self.correct}",
            f"accuracy {self.accuracy:.4f}",
            "",
            "APs  total  correct  accuracy",
        ]
        for k, (t, c) in sorted(self.breakdown.items()):
            lines.append(f"{k:<4} {t:<6} {c:<8} {c / t:.4f}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["ap_count", "total", "correct", "accuracy"])
        for k, (t, c) in sorted(self.breakdown.items()):
            writer.writerow([k, t, c, f"{c / t:.6f}"])
        return buf.getvalue()


def evaluate(pairs: Iterable[tuple[str, str]], fmt: FormatSpec = IN_WORD) -> EvalReport:
    """Score (pred, gold) pairs; breakdown keyed by gold AP count."""
    verdicts = [score(pred, gold, fmt) for pred, gold in pairs]
    if not verdicts:
        raise EmptyInput("no prediction/gold pairs supplied")
    breakdown: dict[int, tuple[int, int]] = {}
    for v in verdicts:
        t, c = breakdown.get(v.gold_ap_count, (0, 0))
        breakdown[v.gold_ap_count] = (t + 1, c + int(v.correct))
    return EvalReport(
        total=len(verdicts),
        correct=sum(v.correct for v in verdicts),
        verdicts=verdicts,
        breakdown=breakdown,
    )


@dataclass
class CorpusStats:
    sentence_count: int
    vocab_size: int
    ap_avg: float
    ap_median: float
    ap_max: int
    op_avg: float
    op_median: float
    op_max: int
    words_avg: float
    words_median: float
    words_max: int
    words_min: int

    def to_json(self) -> dict:
        return {
            "sentences": self.sentence_count,
            "vocabulary": self.vocab_size,
            "aps_per_formula": {
                "avg": self.ap_avg,
                "median": self.ap_median,
                "max": self.ap_max,
            },
            "operators_per_formula": {
                "avg": self.op_avg,
                "median": self.op_median,
                "max": self.op_max,
            },
            "words_per_sentence": {
                "avg": self.words_avg,
                "median": self.words_median,
                "max": self.words_max,
                "min": self.words_min,
            },
        }

    def to_table(self) -> str:
        j = self.to_json()
        lines = [f"sentences   {j['sentences']}", f"vocabulary  {j['vocabulary']}"]
        for label, key in (
            ("APs/formula", "aps_per_formula"),
            ("ops/formula", "operators_per_formula"),
            ("words/sent.", "words_per_sentence"),
        ):
            parts = "  ".join(f"{k}={v}" for k, v in j[key].items())
            lines.append(f"{label} {parts}")
        return "\n".join(lines)


def tokenize_sentence(sentence: str) -> list[str]:
    return sentence.lower().split()


def corpus_stats(items: Iterable) -> CorpusStats:
    """Statistics over records or (sentence, formula) pairs."""
    ap_counts: list[int] = []
    op_counts: list[int] = []
    word_counts: list[int] = []
    vocab: set[str] = set()
    n = 0
    for item in items:
        if hasattr(item, "lifted_nl"):
            sentence, formula = item.lifted_nl, item.formula()
        else:
            sentence, formula = item
        n += 1
        ap_counts.append(ap_count(formula))
        op_counts.append(op_count(formula))
        tokens = tokenize_sentence(sentence)
        word_counts.append(len(tokens))
        vocab.update(tokens)
    if n == 0:
        raise EmptyInput("no records supplied")
    return CorpusStats(
        sentence_count=n,
        vocab_size=len(vocab),
        ap_avg=statistics.fmean(ap_counts),
        ap_median=statistics.median(ap_counts),
        ap_max=max(ap_counts),
        op_avg=statistics.fmean(op_counts),
        op_median=statistics.median(op_counts),
        op_max=max(op_counts),
        words_avg=statistics.fmean(word_counts),
        words_median=statistics.median(word_counts),
        words_max=max(word_counts),
        words_min=min(word_counts),
    )


def iter_dataset_pairs(path: str, fmt: FormatSpec = IN_WORD) -> Iterator[tuple[str, Formula]]:
    """Yield (sentence, formula) from a dataset file (JSONL or CSV).

    JSONL rows may be full dataset records (``lifted_stl`` rendering maps)
    or flat ``{nl, stl}`` objects.  CSV columns are matched on common
    names.  The formula column falls back across all four formats so that
    externally published files load regardless of their rendering.
    """

    def parse_any(text: str) -> Formula:
        last: Exception | None = None
        for candidate in (fmt,) + tuple(f for f in ALL_FORMATS if f != fmt):
            try:
                return parse(text, candidate)
            except ParseError as exc:
                last = exc
        raise last  # type: ignore[misc]

    nl_keys = ("lifted_nl", "nl", "sentence", "natural", "natural_sentence", "logic_sentence")
    stl_keys = ("lifted_stl", "stl", "ltl", "formula", "logic_ltl", "logic_stl", "tl")
    if path.endswith(".csv"):
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                lowered = {k.strip().lower(): v for k, v in row.items() if k}
                nl = next((lowered[k] for k in nl_keys if k in lowered), None)
                stl = next((lowered[k] for k in stl_keys if k in lowered), None)
                if nl is None or stl is None:
                    continue
                yield nl, parse_any(stl)
        return
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            nl = next((row[k] for k in nl_keys if k in row), None)
            stl_field = next((row[k] for k in stl_keys if k in row), None)
            if nl is None or stl_field is None:
                continue
            if isinstance(stl_field, dict):
                key = IN_WORD.key if IN_WORD.key in stl_field else next(iter(stl_field))
                yield nl, parse(stl_field[key], FormatSpec.from_id(key))
            else:
                yield nl, parse_any(stl_field)
