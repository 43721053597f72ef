"""Conversion between full and lifted NL/STL pairs.

Lifting replaces every grounded atomic proposition with a ``prop_i``
placeholder, both in the formula and in the sentence (as ``(prop_i)``
markers); grounding is the inverse.  Placeholder numbering follows first
occurrence in the sentence.  AP spans are found either by a rule-based
dictionary recognizer (longest match over whitespace tokens) or by an
LLM-backed recognizer.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .core import Atom, Formula, Node, walk
from .syntax import FormatSpec, parse

_MARKER_RE = re.compile(r"\(prop_(\d+)\)")


class LiftingError(ValueError):
    pass


class UnmappedAtom(LiftingError):
    pass


class MissingPlaceholder(LiftingError):
    pass


class ExtraPlaceholder(LiftingError):
    pass


class OverlappingSpans(LiftingError):
    pass


class RecognizerUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class ApEntry:
    index: int
    span: str
    name: str
    start: int = -1
    end: int = -1


@dataclass(frozen=True)
class ApMap:
    """Ordered AP occurrences; repeated spans share one placeholder index."""

    entries: tuple[ApEntry, ...] = ()

    def __post_init__(self):
        seen: dict[int, ApEntry] = {}
        prev_end = -1
        next_fresh = 1
        for e in self.entries:
            if e.index in seen:
                if (seen[e.index].span, seen[e.index].name) != (e.span, e.name):
                    raise LiftingError(
                        f"index {e.index} reused with a different span or name"
                    )
            else:
                if e.index != next_fresh:
                    raise LiftingError(
                        f"indices must be assigned 1..k in first-occurrence order, got {e.index}"
                    )
                seen[e.index] = e
                next_fresh += 1
            if e.start >= 0:
                if e.start < prev_end:
                    raise OverlappingSpans(
                        f"span {e.span!r} at {e.start} overlaps the previous span"
                    )
                prev_end = e.end

    def indices(self) -> set[int]:
        return {e.index for e in self.entries}

    def name_of(self, index: int) -> str:
        for e in self.entries:
            if e.index == index:
                return e.name
        raise MissingPlaceholder(f"no AP entry for prop_{index}")

    def span_of(self, index: int) -> str:
        for e in self.entries:
            if e.index == index:
                return e.span
        raise MissingPlaceholder(f"no AP entry for prop_{index}")

    def index_by_name(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.entries:
            out.setdefault(_norm(e.name), e.index)
        return out

    def to_json(self) -> list[dict]:
        return [
            {"index": e.index, "span": e.span, "name": e.name, "start": e.start, "end": e.end}
            for e in self.entries
        ]

    @classmethod
    def from_json(cls, data: list[dict]) -> "ApMap":
        return cls(tuple(ApEntry(**row) for row in data))


@dataclass(frozen=True)
class LiftedPair:
    nl: str
    stl: Formula


@dataclass(frozen=True)
class FullPair:
    nl: str
    stl: Formula
    ap_map: ApMap


def _norm(text: str) -> str:
    return " ".join(text.split())


# --- AP formatting conventions (data-driven) ---------------------------------

_DEFAULT_PARTICLES = (
    "to", "near", "into", "onto", "in", "at", "on",
    "through", "past", "by", "up", "down", "towards",
)


@dataclass(frozen=True)
class Convention:
    kind: str  # "snake" or "verb_noun"
    particles: tuple[str, ...] = _DEFAULT_PARTICLES

    @classmethod
    def from_config(cls, data: dict) -> "Convention":
        return cls(kind=data["kind"], particles=tuple(data.get("particles", _DEFAULT_PARTICLES)))


IDENTITY_SNAKE = Convention("snake")


def load_conventions(path: str | Path) -> dict[str, Convention]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {name: Convention.from_config(cfg) for name, cfg in data.items()}


def format_ap(span: str, convention: Convention = IDENTITY_SNAKE) -> str:
    """Deterministic formatted AP name for a surface span."""
    words = _norm(span).lower().split()
    if not words:
        raise LiftingError("empty span")
    if convention.kind == "snake":
        return "_".join(words)
    if convention.kind == "verb_noun":
        verb = [words[0]]
        rest = words[1:]
        while rest and rest[0] in convention.particles:
            verb.append(rest.pop(0))
        name = "_".join(verb) + "_v"
        if rest:
            name += " " + "_".join(rest) + "_n"
        return name
    raise LiftingError(f"unknown convention kind {convention.kind!r}")


# --- recognizers --------------------------------------------------------------


def _sentence_tokens(sentence: str) -> list[tuple[str, int, int]]:
    """(token, start, end) triples over whitespace-separated words."""
    out = []
    for m in re.finditer(r"\S+", sentence):
        out.append((m.group(0), m.start(), m.end()))
    return out


class DictionaryRecognizer:
    """Longest-match phrase lookup over whitespace tokens, case-insensitive."""

    def __init__(self, phrases: dict[str, str]):
        self._by_tokens: dict[tuple[str, ...], str] = {}
        for phrase, name in phrases.items():
            toks = tuple(_norm(phrase).lower().split())
            if not toks:
                continue
            self._by_tokens[toks] = name
        self._max_len = max((len(t) for t in self._by_tokens), default=0)

    @classmethod
    def from_file(
        cls, path: str | Path, convention: Convention | None = None
    ) -> "DictionaryRecognizer":
        """Load ``phrase<TAB>name`` lines; single-column lines use the convention."""
        phrases: dict[str, str] = {}
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "\t" in line:
                phrase, name = line.split("\t", 1)
            else:
                if convention is None:
                    raise LiftingError(
                        f"dictionary line {line!r} has no name column and no convention given"
                    )
                phrase, name = line, format_ap(line, convention)
            phrases[phrase.strip()] = name.strip()
        return cls(phrases)

    def recognize(self, sentence: str) -> ApMap:
        tokens = _sentence_tokens(sentence)
        lowered = [t[0].lower() for t in tokens]
        entries: list[ApEntry] = []
        index_by_span: dict[str, int] = {}
        i = 0
        while i < len(tokens):
            matched = None
            for width in range(min(self._max_len, len(tokens) - i), 0, -1):
                candidate = tuple(lowered[i : i + width])
                if candidate in self._by_tokens:
                    matched = (width, self._by_tokens[candidate])
                    break
            if matched is None:
                i += 1
                continue
            width, name = matched
            start = tokens[i][1]
            end = tokens[i + width - 1][2]
            span = sentence[start:end]
            idx = index_by_span.get(_norm(span).lower())
            if idx is None:
                idx = len(index_by_span) + 1
                index_by_span[_norm(span).lower()] = idx
            entries.append(ApEntry(idx, span, name, start, end))
            i += width
        return ApMap(tuple(entries))


class LlmRecognizer:
    """AP spans via a completion backend; spans are located in the sentence."""

    def __init__(self, backend, pool, spec, convention: Convention = IDENTITY_SNAKE):
        self._backend = backend
        self._pool = pool
        self._spec = spec
        self._convention = convention

    def recognize(self, sentence: str) -> ApMap:
        from .gateway import GatewayError, translate

        try:
            result = translate(self._backend, self._pool, self._spec, sentence)
        except GatewayError as exc:
            raise RecognizerUnavailable(str(exc)) from exc
        spans = [s.strip() for s in result.output.split("|") if s.strip()]
        entries: list[ApEntry] = []
        index_by_span: dict[str, int] = {}
        cursor = 0
        for span in spans:
            at = sentence.find(span, cursor)
            if at < 0:
                at = sentence.find(span)
            if at < 0:
                raise RecognizerUnavailable(f"reported span {span!r} not found in sentence")
            idx = index_by_span.setdefault(_norm(span).lower(), len(index_by_span) + 1)
            entries.append(
                ApEntry(idx, span, format_ap(span, self._convention), at, at + len(span))
            )
            cursor = max(cursor, at + len(span))
        return ApMap(tuple(entries))


def recognize_aps(sentence: str, recognizer) -> ApMap:
    ap_map = recognizer.recognize(sentence)
    # __post_init__ enforces ordering/overlap rules; re-raise uniform type
    return ap_map


# --- lift / ground ------------------------------------------------------------


def _mask_formula(stl: Formula, names_to_index: dict[str, int]) -> Formula:
    if isinstance(stl, Atom):
        if stl.is_placeholder:
            return stl
        idx = names_to_index.get(_norm(str(stl.label)))
        if idx is None:
            raise UnmappedAtom(f"no AP entry matches payload {stl.label!r}")
        return Atom(idx)
    return Node(stl.op, tuple(_mask_formula(c, names_to_index) for c in stl.children))


def _mask_sentence(sentence: str, ap_map: ApMap) -> str:
    ranged = [e for e in ap_map.entries if e.start >= 0]
    if ranged:
        out = []
        cursor = 0
        for e in sorted(ranged, key=lambda e: e.start):
            out.append(sentence[cursor : e.start])
            out.append(f"(prop_{e.index})")
            cursor = e.end
        out.append(sentence[cursor:])
        return "".join(out)
    # no character ranges: fall back to first-occurrence textual replacement
    out_text = sentence
    for e in ap_map.entries:
        out_text = out_text.replace(e.span, f"(prop_{e.index})", 1)
    return out_text


def lift(pair: FullPair) -> LiftedPair:
    """Hide every grounded AP behind its placeholder, in formula and sentence."""
    lifted_stl = _mask_formula(pair.stl, pair.ap_map.index_by_name())
    lifted_nl = _mask_sentence(pair.nl, pair.ap_map)
    return LiftedPair(nl=lifted_nl, stl=lifted_stl)


def lift_formula(stl: Formula) -> tuple[Formula, ApMap]:
    """Formula-only lifting; numbering by first occurrence in the formula."""
    index_by_name: dict[str, int] = {}
    entries: list[ApEntry] = []
    for node in walk(stl):
        if isinstance(node, Atom) and not node.is_placeholder:
            name = _norm(str(node.label))
            if name not in index_by_name:
                idx = len(index_by_name) + 1
                index_by_name[name] = idx
                entries.append(ApEntry(idx, str(node.label), str(node.label)))
    return _mask_formula(stl, index_by_name), ApMap(tuple(entries))


def ground(lifted: LiftedPair, ap_map: ApMap) -> FullPair:
    """Inverse of ``lift``: swap placeholders back to formatted AP payloads."""
    known = ap_map.indices()

    def rec(f: Formula) -> Formula:
        if isinstance(f, Atom):
            if not f.is_placeholder:
                return f
            if f.label not in known:
                raise MissingPlaceholder(f"map has no entry for prop_{f.label}")
            return Atom(ap_map.name_of(f.label))  # type: ignore[arg-type]
        return Node(f.op, tuple(rec(c) for c in f.children))

    grounded_stl = rec(lifted.stl)

    pieces: list[str] = []
    new_entries: list[ApEntry] = []
    cursor = 0
    offset = 0
    for m in _MARKER_RE.finditer(lifted.nl):
        idx = int(m.group(1))
        if idx not in known:
            raise ExtraPlaceholder(f"sentence marker (prop_{idx}) has no map entry")
        span = ap_map.span_of(idx)
        pieces.append(lifted.nl[cursor : m.start()])
        offset += m.start() - cursor
        new_entries.append(
            ApEntry(idx, span, ap_map.name_of(idx), offset, offset + len(span))
        )
        pieces.append(span)
        offset += len(span)
        cursor = m.end()
    pieces.append(lifted.nl[cursor:])
    grounded_nl = "".join(pieces)
    new_entries.sort(key=lambda e: e.start)
    return FullPair(nl=grounded_nl, stl=grounded_stl, ap_map=ApMap(tuple(new_entries)))


# --- text-level helpers shared with ingestion ---------------------------------


def mask_stl_text(stl_text: str, ap_map: ApMap) -> str:
    """Replace formatted AP names in formula text with placeholder tokens.

    Matching is over whitespace tokens, longest name first, so payloads
    containing operator words are removed before parsing.
    """
    tokens = stl_text.replace("(", " ( ").replace(")", " ) ").split()
    names = sorted(
        {(_norm(e.name), e.index) for e in ap_map.entries},
        key=lambda pair: -len(pair[0].split()),
    )
    for name, idx in names:
        name_toks = name.split()
        width = len(name_toks)
        i = 0
        while i + width <= len(tokens):
            if tokens[i : i + width] == name_toks:
                tokens[i : i + width] = [f"prop_{idx}"]
            else:
                i += 1
    return " ".join(tokens)


def parse_grounded(stl_text: str, fmt: FormatSpec, ap_map: ApMap) -> Formula:
    """Parse full STL text whose AP payloads are known up front."""
    lifted = parse(mask_stl_text(stl_text, ap_map), fmt)
    name_by_index = {e.index: e.name for e in ap_map.entries}

    def rec(f: Formula) -> Formula:
        if isinstance(f, Atom):
            if f.is_placeholder and f.label in name_by_index:
                return Atom(name_by_index[f.label])  # type: ignore[index]
            return f
        return Node(f.op, tuple(rec(c) for c in f.children))

    return rec(lifted)
