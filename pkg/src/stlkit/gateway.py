"""Prompt construction and completion calls for the three LLM tasks.

Tasks: formula-to-sentence, sentence-to-formula, and AP span detection.
Prompts are k example pairs sampled without replacement from a pool,
rendered as alternating labeled lines and terminated with the query and
an answer cue.  A deterministic mock backend keeps the whole pipeline
runnable offline; the live backend speaks an OpenAI-style
chat-completions protocol.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import random
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .core import Atom, Formula, Interval, OpKind
from .syntax import (
    FormatSpec,
    IN_WORD,
    ParseError,
    Unrepairable,
    linearize,
    normalize_ws,
    parse,
    repair,
)


class Task(enum.Enum):
    STL_TO_NL = "stl_to_nl"
    NL_TO_STL = "nl_to_stl"
    AP_DETECT = "ap_detect"


class GatewayError(RuntimeError):
    pass


class PoolTooSmall(GatewayError):
    pass


class Timeout(GatewayError):
    pass


class RateLimited(GatewayError):
    pass


class AuthFailed(GatewayError):
    pass


class MalformedResponse(GatewayError):
    pass


class TransportError(GatewayError):
    """Retriable transport-level failure (connection reset, 5xx, ...)."""


_TRANSIENT = (Timeout, RateLimited, TransportError)


@dataclass(frozen=True)
class ExamplePair:
    nl: str
    stl: str


@dataclass(frozen=True)
class ExamplePool:
    pairs: tuple[ExamplePair, ...]
    source: str = ""

    def __post_init__(self):
        seen = set()
        for pair in self.pairs:
            if pair.nl in seen:
                raise ValueError(f"duplicate NL entry in pool: {pair.nl!r}")
            seen.add(pair.nl)

    @classmethod
    def from_jsonl(cls, path: str | Path, source: str = "") -> "ExamplePool":
        pairs = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            pairs.append(ExamplePair(nl=row["nl"], stl=row["stl"]))
        return cls(tuple(pairs), source=source or str(path))


@dataclass(frozen=True)
class PromptSpec:
    task: Task
    k: int = 20
    fmt: FormatSpec = IN_WORD
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = ""
    model: str = ""
    credential_env: str = "STLKIT_API_KEY"
    timeout_s: float = 30.0
    max_attempts: int = 3
    backoff_s: float = 1.0
    max_in_flight: int = 4
    params: tuple[tuple[str, object], ...] = ()  # decoding passthrough
    audit_path: str | None = None

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class CompletionRequest:
    task: Task
    query: str
    prompt: str
    fmt: FormatSpec = IN_WORD


@dataclass
class CompletionResult:
    text: str
    attempts: int
    request_id: str = ""
    latency_s: float = 0.0


class InFlightGate:
    """Bounded-parallelism semaphore with a peak-concurrency test hook."""

    def __init__(self, limit: int):
        self._sem = threading.BoundedSemaphore(limit)
        self._lock = threading.Lock()
        self._active = 0
        self.peak = 0

    def __enter__(self):
        self._sem.acquire()
        with self._lock:
            self._active += 1
            self.peak = max(self.peak, self._active)
        return self

    def __exit__(self, *exc):
        with self._lock:
            self._active -= 1
        self._sem.release()
        return False


_PROMPT_LAYOUT = {
    Task.STL_TO_NL: (
        "Transform the following signal temporal logic into a natural language sentence.",
        "STL",
        "Sentence",
    ),
    Task.NL_TO_STL: (
        "Transform the following natural language sentence into signal temporal logic.",
        "Sentence",
        "STL",
    ),
    Task.AP_DETECT: (
        "List the atomic propositions that appear in the sentence, separated by ' | '.",
        "Sentence",
        "APs",
    ),
}


def build_prompt(pool: ExamplePool, spec: PromptSpec, query: str) -> str:
    """Deterministic prompt: k sampled pairs, then the query and answer cue."""
    if len(pool.pairs) < spec.k:
        raise PoolTooSmall(f"pool has {len(pool.pairs)} pairs, prompt needs {spec.k}")
    rng = random.Random(spec.seed)
    chosen = rng.sample(list(pool.pairs), spec.k)
    header, ask_label, answer_label = _PROMPT_LAYOUT[spec.task]
    blocks = [header]
    for pair in chosen:
        if spec.task is Task.STL_TO_NL:
            ask, answer = pair.stl, pair.nl
        else:
            ask, answer = pair.nl, pair.stl
        blocks.append(f"{ask_label}: {ask}\n{answer_label}: {answer}")
    blocks.append(f"{ask_label}: {query}\n{answer_label}:")
    return "\n\n".join(blocks)


def complete(
    backend,
    request: CompletionRequest,
    *,
    max_attempts: int | None = None,
    backoff_s: float | None = None,
) -> CompletionResult:
    """Call the backend, retrying transient failures with linear backoff."""
    config = getattr(backend, "config", None)
    attempts_cap = max_attempts or (config.max_attempts if config else 3)
    backoff = backoff_s if backoff_s is not None else (config.backoff_s if config else 0.0)
    attempt = 0
    while True:
        attempt += 1
        started = time.monotonic()
        try:
            text = backend.complete(request)
        except _TRANSIENT:
            if attempt >= attempts_cap:
                raise
            if backoff:
                time.sleep(backoff * attempt)
            continue
        return CompletionResult(
            text=text,
            attempts=attempt,
            request_id=uuid.uuid4().hex,
            latency_s=time.monotonic() - started,
        )


@dataclass
class TranslationResult:
    output: str
    formula: Formula | None = None
    parse_failure: str | None = None
    repaired: bool = False
    attempts: int = 1


def translate(backend, pool: ExamplePool, spec: PromptSpec, text: str) -> TranslationResult:
    """Prompt + complete; formula-producing tasks get repair-then-parse."""
    prompt = build_prompt(pool, spec, text)
    request = CompletionRequest(task=spec.task, query=text, prompt=prompt, fmt=spec.fmt)
    completion = complete(backend, request)
    output = completion.text.strip()
    result = TranslationResult(output=output, attempts=completion.attempts)
    if spec.task is Task.NL_TO_STL:
        try:
            fixed = repair(output, spec.fmt)
            result.formula = parse(fixed, spec.fmt)
            result.repaired = fixed != output
        except (Unrepairable, ParseError) as exc:
            result.parse_failure = str(exc)
    return result


# --- live backend --------------------------------------------------------------


class HttpBackend:
    """OpenAI-compatible chat-completions transport."""

    def __init__(self, config: BackendConfig):
        self.config = config
        self.gate = InFlightGate(config.max_in_flight)
        self._audit_lock = threading.Lock()

    def _credential(self) -> str:
        value = os.environ.get(self.config.credential_env, "")
        if not value:
            raise AuthFailed(
                f"credential env var {self.config.credential_env} is not set"
            )
        return value

    def complete(self, request: CompletionRequest) -> str:
        import requests

        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
        }
        payload.update(dict(self.config.params))
        headers = {
            "Authorization": f"Bearer {self._credential()}",
            "Content-Type": "application/json",
        }
        started = time.monotonic()
        try:
            with self.gate:
                response = requests.post(
                    self.config.endpoint,
                    json=payload,
                    headers=headers,
                    timeout=self.config.timeout_s,
                )
        except requests.Timeout as exc:
            raise Timeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if response.status_code in (401, 403):
            raise AuthFailed(f"endpoint rejected credentials ({response.status_code})")
        if response.status_code == 429:
            raise RateLimited("rate limited by endpoint")
        if response.status_code >= 500:
            raise TransportError(f"server error {response.status_code}")
        if response.status_code != 200:
            raise MalformedResponse(f"unexpected status {response.status_code}")
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
            usage = body.get("usage", {})
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"cannot extract completion: {exc}") from exc
        self._audit(request, text, usage, time.monotonic() - started)
        return text

    def _audit(self, request: CompletionRequest, text: str, usage: dict, latency: float):
        if not self.config.audit_path:
            return
        record = {
            "request_id": uuid.uuid4().hex,
            "task": request.task.value,
            "model": self.config.model,
            "latency_s": round(latency, 4),
            "prompt_chars": len(request.prompt),
            "completion_chars": len(text),
            "usage": usage,
        }
        with self._audit_lock:
            with open(self.config.audit_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")


# --- mock backend ---------------------------------------------------------------


def _verbalize(f: Formula) -> str:
    """Deterministic rule-based English rendering used by the mock."""

    def tv(interval: Interval | None, here: str, timed: str, after: str) -> str:
        if interval is None:
            return here
        if interval.upper is None:
            return after.format(a=interval.lower)
        return timed.format(a=interval.lower, b=interval.upper)

    def rec(node: Formula) -> str:
        if isinstance(node, Atom):
            return f"({node.text()})"
        kind = node.op.kind
        if kind is OpKind.NEGATION:
            return f"it is not the case that {rec(node.children[0])}"
        if kind is OpKind.AND:
            return f"{rec(node.children[0])} and {rec(node.children[1])}"
        if kind is OpKind.OR:
            return f"{rec(node.children[0])} or {rec(node.children[1])}"
        if kind is OpKind.IMPLY:
            return f"if {rec(node.children[0])} then {rec(node.children[1])}"
        if kind is OpKind.EQUAL:
            return f"{rec(node.children[0])} exactly when {rec(node.children[1])}"
        if kind is OpKind.FINALLY:
            lead = tv(
                node.op.interval,
                "at some point",
                "at some point during the next {a} to {b} time units",
                "at some point after {a} time units",
            )
            return f"{lead} {rec(node.children[0])}"
        if kind is OpKind.GLOBALLY:
            lead = tv(
                node.op.interval,
                "at every moment",
                "at every moment during the next {a} to {b} time units",
                "at every moment after {a} time units",
            )
            return f"{lead} {rec(node.children[0])}"
        lead = tv(
            node.op.interval,
            "until",
            "until at some point during the {a} to {b} time units",
            "until at some point after {a} time units",
        )
        return f"{rec(node.children[0])} {lead} {rec(node.children[1])}"

    sentence = rec(f)
    return sentence[0].upper() + sentence[1:] + " ."


def fingerprint(task: Task, query: str) -> str:
    digest = hashlib.sha256(f"{task.value}\x1f{normalize_ws(query)}".encode()).hexdigest()
    return digest[:16]


class MockBackend:
    """Offline deterministic backend.

    Canned completions are keyed by a hash of (task, query).  Without a
    canned hit, formula-to-sentence requests are verbalized by rules and
    remembered, so that later sentence-to-formula requests can close the
    loop exactly; AP detection falls back to an optional dictionary.
    """

    def __init__(
        self,
        canned: Mapping[tuple[Task, str], str] | None = None,
        recognizer=None,
        config: BackendConfig | None = None,
    ):
        self.config = config or BackendConfig(endpoint="mock", model="mock", backoff_s=0.0)
        self.gate = InFlightGate(self.config.max_in_flight)
        self._canned: dict[str, str] = {}
        for (task, query), completion in (canned or {}).items():
            self._canned[fingerprint(task, query)] = completion
        self._memory: dict[str, Formula] = {}
        self._recognizer = recognizer
        self._lock = threading.Lock()
        self._failures: list[Exception] = []
        self.calls = 0

    def add_canned(self, task: Task, query: str, completion: str) -> None:
        self._canned[fingerprint(task, query)] = completion

    def fail_next(self, *errors: Exception) -> None:
        """Queue errors to raise on upcoming calls (for retry tests)."""
        self._failures.extend(errors)

    def complete(self, request: CompletionRequest) -> str:
        with self.gate:
            with self._lock:
                self.calls += 1
                if self._failures:
                    raise self._failures.pop(0)
            hit = self._canned.get(fingerprint(request.task, request.query))
            if hit is not None:
                return hit
            return self._fallback(request)

    def _fallback(self, request: CompletionRequest) -> str:
        if request.task is Task.STL_TO_NL:
            formula = parse(request.query, request.fmt)
            sentence = _verbalize(formula)
            with self._lock:
                self._memory[normalize_ws(sentence)] = formula
            return sentence
        if request.task is Task.NL_TO_STL:
            with self._lock:
                formula = self._memory.get(normalize_ws(request.query))
            if formula is None:
                return "unknown sentence"
            return linearize(formula, request.fmt)
        if self._recognizer is None:
            return ""
        spans = self._recognizer.recognize(request.query)
        return " | ".join(e.span for e in spans.entries)


def load_canned_fixtures(path: str | Path) -> dict[tuple[Task, str], str]:
    """JSONL rows {task, query, completion} -> canned table."""
    out: dict[tuple[Task, str], str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        out[(Task(row["task"]), row["query"])] = row["completion"]
    return out
