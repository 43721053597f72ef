"""Dataset generation, ingestion, persistence, and the annotation lifecycle.

Records are persisted as append-only JSONL, one full record per line; the
latest line for an id wins.  Mutations go through the store under a single
writer lock with optimistic versioning.  Status moves only along
raw -> annotated -> {crosschecked, rejected}.
"""

from __future__ import annotations

import json
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from .core import Formula, tree_equal
from .gateway import (
    ExamplePool,
    GatewayError,
    PromptSpec,
    Task,
    translate,
)
from .lifting import ApMap, LiftingError, UnmappedAtom, mask_stl_text
from .synthesis import (
    ResampleBudgetExhausted,
    SynthConfig,
    _draw_sane,
    check_config,
)
from .syntax import (
    ALL_FORMATS,
    FormatSpec,
    IN_WORD,
    PRE_WORD,
    ParseError,
    linearize,
    normalize_ws,
    parse,
)

PROVENANCES = ("framework1", "framework2", "ingested", "manual")
STATUSES = ("raw", "annotated", "crosschecked", "rejected")
_TRANSITIONS = {
    ("raw", "annotate"): "annotated",
    ("annotated", "accept"): "crosschecked",
    ("annotated", "reject"): "rejected",
}


class PipelineError(RuntimeError):
    pass


class WrongStatus(PipelineError):
    pass


class SelfReview(PipelineError):
    pass


class VersionConflict(PipelineError):
    pass


class UnknownRecord(PipelineError):
    pass


class FileUnreadable(PipelineError):
    pass


class SchemaMismatch(PipelineError):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def renderings(f: Formula) -> dict[str, str]:
    return {fmt.key: linearize(f, fmt) for fmt in ALL_FORMATS}


@dataclass
class DatasetRecord:
    id: str
    domain: str
    lifted_nl: str
    lifted_stl: dict[str, str]
    provenance: str
    status: str = "raw"
    ap_map: ApMap | None = None
    annotator: str | None = None
    reviewer: str | None = None
    version: int = 1
    created_at: str = field(default_factory=_now)
    updated_at: str = field(default_factory=_now)
    history: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def formula(self, fmt: FormatSpec = IN_WORD) -> Formula:
        return parse(self.lifted_stl[fmt.key], fmt)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "domain": self.domain,
            "lifted_nl": self.lifted_nl,
            "lifted_stl": dict(self.lifted_stl),
            "ap_map": self.ap_map.to_json() if self.ap_map is not None else None,
            "provenance": self.provenance,
            "status": self.status,
            "annotator": self.annotator,
            "reviewer": self.reviewer,
            "version": self.version,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "history": list(self.history),
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_json(cls, row: dict) -> "DatasetRecord":
        ap_map = row.get("ap_map")
        return cls(
            id=row["id"],
            domain=row.get("domain", ""),
            lifted_nl=row["lifted_nl"],
            lifted_stl=dict(row["lifted_stl"]),
            ap_map=ApMap.from_json(ap_map) if ap_map else None,
            provenance=row.get("provenance", "manual"),
            status=row.get("status", "raw"),
            annotator=row.get("annotator"),
            reviewer=row.get("reviewer"),
            version=row.get("version", 1),
            created_at=row.get("created_at", _now()),
            updated_at=row.get("updated_at", _now()),
            history=list(row.get("history", [])),
            metadata=dict(row.get("metadata", {})),
        )


@dataclass
class RunManifest:
    framework: str
    backend: str
    requested: int
    produced: int = 0
    parse_failed: int = 0
    sanity_rejected: int = 0
    deduped: int = 0
    backend_failed: int = 0
    sanity_resampled: int = 0  # informational: in-slot redraws
    wall_time_s: float = 0.0
    synth_config: dict = field(default_factory=dict)
    prompt_spec: dict = field(default_factory=dict)

    def reconciles(self) -> bool:
        return self.requested == (
            self.produced
            + self.parse_failed
            + self.sanity_rejected
            + self.deduped
            + self.backend_failed
        )

    def to_json(self) -> dict:
        return {
            "framework": self.framework,
            "backend": self.backend,
            "counts": {
                "requested": self.requested,
                "produced": self.produced,
                "parse_failed": self.parse_failed,
                "sanity_rejected": self.sanity_rejected,
                "deduped": self.deduped,
                "backend_failed": self.backend_failed,
                "sanity_resampled": self.sanity_resampled,
            },
            "wall_time_s": round(self.wall_time_s, 3),
            "synth_config": self.synth_config,
            "prompt_spec": self.prompt_spec,
        }


class DatasetStore:
    """Append-only JSONL store; one writer, optimistic versioning."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, DatasetRecord] = {}
        self._order: list[str] = []
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                record = DatasetRecord.from_json(json.loads(line))
                if record.id not in self._records:
                    self._order.append(record.id)
                self._records[record.id] = record

    def records(self, status: str | None = None) -> list[DatasetRecord]:
        out = [self._records[rid] for rid in self._order]
        if status:
            out = [r for r in out if r.status == status]
        return out

    def get(self, record_id: str) -> DatasetRecord:
        try:
            return self._records[record_id]
        except KeyError:
            raise UnknownRecord(record_id) from None

    def append(self, record: DatasetRecord) -> None:
        with self._lock:
            self._write(record)

    def append_all(self, records: list[DatasetRecord]) -> None:
        with self._lock:
            for record in records:
                self._write(record)

    def _write(self, record: DatasetRecord) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.to_json()) + "\n")
        if record.id not in self._records:
            self._order.append(record.id)
        self._records[record.id] = record

    def _take(self, record_id: str, version: int) -> DatasetRecord:
        record = self.get(record_id)
        if record.version != version:
            raise VersionConflict(
                f"record {record_id} is at version {record.version}, got {version}"
            )
        return record

    def submit_annotation(
        self, record_id: str, corrected_nl: str, annotator: str, version: int
    ) -> DatasetRecord:
        with self._lock:
            record = self._take(record_id, version)
            if record.status != "raw":
                raise WrongStatus(f"cannot annotate a {record.status} record")
            updated = replace(
                record,
                lifted_nl=corrected_nl,
                annotator=annotator,
                status=_TRANSITIONS[("raw", "annotate")],
                version=record.version + 1,
                updated_at=_now(),
                history=record.history
                + [
                    {
                        "nl": record.lifted_nl,
                        "annotator": record.annotator,
                        "timestamp": record.updated_at,
                    }
                ],
            )
            self._write(updated)
            return updated

    def crosscheck(
        self, record_id: str, reviewer: str, verdict: str, version: int
    ) -> DatasetRecord:
        if verdict not in ("accept", "reject"):
            raise PipelineError(f"verdict must be accept or reject, got {verdict!r}")
        with self._lock:
            record = self._take(record_id, version)
            if record.status != "annotated":
                raise WrongStatus(f"cannot crosscheck a {record.status} record")
            if record.annotator is not None and reviewer == record.annotator:
                raise SelfReview("reviewer must differ from the annotator")
            updated = replace(
                record,
                reviewer=reviewer,
                status=_TRANSITIONS[("annotated", verdict)],
                version=record.version + 1,
                updated_at=_now(),
                metadata={**record.metadata, "verdict": verdict},
            )
            self._write(updated)
            return updated

    def assign_reviewer(self, record_id: str, reviewers: list[str], seed: int = 0) -> str:
        """Random reviewer excluding the annotator, seeded for reproducibility."""
        record = self.get(record_id)
        candidates = [r for r in reviewers if r != record.annotator]
        if not candidates:
            raise PipelineError("no eligible reviewer")
        rng = random.Random(f"{seed}:{record_id}")
        return rng.choice(candidates)


def dedup(records: list[DatasetRecord]) -> list[DatasetRecord]:
    """Drop later records repeating (normalized NL, canonical STL); stable."""
    seen: set[tuple[str, str]] = set()
    out = []
    for record in records:
        key = (
            normalize_ws(record.lifted_nl).lower(),
            normalize_ws(record.lifted_stl[IN_WORD.key]),
        )
        if key in seen:
            continue
        seen.add(key)
        out.append(record)
    return out


def _record_id(provenance: str, seed: int, index: int) -> str:
    return f"{provenance}-s{seed}-{index:05d}"


def _new_record(
    provenance: str,
    domain: str,
    nl: str,
    formula: Formula,
    record_id: str,
    ap_map: ApMap | None = None,
    metadata: dict | None = None,
) -> DatasetRecord:
    return DatasetRecord(
        id=record_id,
        domain=domain,
        lifted_nl=nl,
        lifted_stl=renderings(formula),
        ap_map=ap_map,
        provenance=provenance,
        metadata=metadata or {},
    )


def _generate(
    framework: str,
    n: int,
    synth_config: SynthConfig,
    prompt_spec: PromptSpec,
    backend,
    pool: ExamplePool,
    *,
    domain: str,
    dedup_records: bool,
    back_format: FormatSpec,
    max_workers: int = 1,
) -> tuple[list[DatasetRecord], RunManifest]:
    check_config(synth_config)
    if len(pool.pairs) < prompt_spec.k:
        from .gateway import PoolTooSmall

        raise PoolTooSmall(
            f"prompt pool has {len(pool.pairs)} pairs, prompts need {prompt_spec.k}"
        )
    started = time.monotonic()
    model = getattr(getattr(backend, "config", None), "model", "")
    manifest = RunManifest(
        framework=framework,
        backend=f"{type(backend).__name__}:{model}",
        requested=n,
        synth_config={"max_aps": synth_config.max_aps, "seed": synth_config.seed},
        prompt_spec={"k": prompt_spec.k, "fmt": prompt_spec.fmt.id, "seed": prompt_spec.seed},
    )
    rng = random.Random(synth_config.seed)
    drawn: list[Formula | None] = []
    for _ in range(n):
        try:
            f, rejections = _draw_sane(synth_config, rng)
            manifest.sanity_resampled += rejections
            drawn.append(f)
        except ResampleBudgetExhausted:
            manifest.sanity_rejected += 1
            drawn.append(None)

    def job(i: int) -> DatasetRecord | str:
        f = drawn[i]
        if f is None:
            return "sanity_rejected"
        stl_text = linearize(f, prompt_spec.fmt)
        forward = replace(prompt_spec, task=Task.STL_TO_NL, seed=prompt_spec.seed + i)
        try:
            nl_result = translate(backend, pool, forward, stl_text)
        except GatewayError:
            return "backend_failed"
        raw_nl = nl_result.output
        if framework == "framework1":
            return _new_record(
                framework, domain, raw_nl, f, _record_id(framework, synth_config.seed, i)
            )
        backward = replace(
            prompt_spec, task=Task.NL_TO_STL, fmt=back_format, seed=prompt_spec.seed + i
        )
        try:
            stl_result = translate(backend, pool, backward, raw_nl)
        except GatewayError:
            return "backend_failed"
        if stl_result.formula is None:
            return "parse_failed"
        return _new_record(
            framework,
            domain,
            raw_nl,
            stl_result.formula,
            _record_id(framework, synth_config.seed, i),
            metadata={"high_agreement": tree_equal(f, stl_result.formula)},
        )

    indices = [i for i in range(n) if drawn[i] is not None]
    outcomes: dict[int, DatasetRecord | str] = {
        i: "sanity_rejected" for i in range(n) if drawn[i] is None
    }
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool_exec:
            for i, outcome in zip(indices, pool_exec.map(job, indices)):
                outcomes[i] = outcome
    else:
        for i in indices:
            outcomes[i] = job(i)

    records: list[DatasetRecord] = []
    for i in range(n):
        outcome = outcomes[i]
        if isinstance(outcome, DatasetRecord):
            records.append(outcome)
        elif outcome == "parse_failed":
            manifest.parse_failed += 1
        elif outcome == "backend_failed":
            manifest.backend_failed += 1

    if dedup_records:
        kept = dedup(records)
        manifest.deduped = len(records) - len(kept)
        records = kept
    manifest.produced = len(records)
    manifest.wall_time_s = time.monotonic() - started
    return records, manifest


def run_framework1(
    n: int,
    synth_config: SynthConfig,
    prompt_spec: PromptSpec,
    backend,
    pool: ExamplePool,
    *,
    domain: str = "synthesized",
    dedup_records: bool = True,
    max_workers: int = 1,
) -> tuple[list[DatasetRecord], RunManifest]:
    """Synthesize STL, verbalize via the backend, keep (raw NL, STL) pairs."""
    return _generate(
        "framework1",
        n,
        synth_config,
        prompt_spec,
        backend,
        pool,
        domain=domain,
        dedup_records=dedup_records,
        back_format=PRE_WORD,
        max_workers=max_workers,
    )


def run_framework2(
    n: int,
    synth_config: SynthConfig,
    prompt_spec: PromptSpec,
    backend,
    pool: ExamplePool,
    *,
    domain: str = "synthesized",
    dedup_records: bool = True,
    back_format: FormatSpec = PRE_WORD,
    max_workers: int = 1,
) -> tuple[list[DatasetRecord], RunManifest]:
    """Framework1 plus a backend round trip: keep (NL-1, STL-2) pairs.

    Pairs whose back-translated formula matches the original are flagged
    ``high_agreement``; unparseable back-translations are dropped and
    counted.
    """
    return _generate(
        "framework2",
        n,
        synth_config,
        prompt_spec,
        backend,
        pool,
        domain=domain,
        dedup_records=dedup_records,
        back_format=back_format,
        max_workers=max_workers,
    )


@dataclass
class QuarantinedRow:
    row: int
    reason: str

    def to_json(self) -> dict:
        return {"row": self.row, "reason": self.reason}


def ingest_full_pairs(
    path: str | Path,
    domain: str,
    recognizer,
    *,
    default_format: FormatSpec = IN_WORD,
    quarantine_path: str | Path | None = None,
    id_prefix: str | None = None,
) -> tuple[list[DatasetRecord], list[QuarantinedRow]]:
    """Lift external full NL/STL rows; failing rows are quarantined with reasons.

    Input rows are JSONL objects ``{"nl": ..., "stl": ..., "format": ...}``.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FileUnreadable(str(exc)) from exc
    records: list[DatasetRecord] = []
    quarantined: list[QuarantinedRow] = []
    prefix = id_prefix or f"ingested-{domain}"
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except ValueError as exc:
            raise SchemaMismatch(f"row {i}: not valid JSON: {exc}") from exc
        if not isinstance(row, dict) or "nl" not in row or "stl" not in row:
            raise SchemaMismatch(f"row {i}: expected object with nl and stl fields")
        fmt = FormatSpec.from_id(row["format"]) if row.get("format") else default_format
        try:
            ap_map = recognizer.recognize(row["nl"])
            masked = mask_stl_text(row["stl"], ap_map)
            formula = parse(masked, fmt)
            leftovers = sorted(
                {a.text() for a in _grounded_atoms(formula)}
            )
            if leftovers:
                raise UnmappedAtom(f"payloads not covered by recognized APs: {leftovers}")
            lifted_nl = _replace_spans(row["nl"], ap_map)
        except (LiftingError, ParseError) as exc:
            quarantined.append(QuarantinedRow(row=i, reason=f"{type(exc).__name__}: {exc}"))
            continue
        records.append(
            _new_record(
                "ingested",
                domain,
                lifted_nl,
                formula,
                f"{prefix}-{i:05d}",
                ap_map=ap_map,
            )
        )
    if quarantine_path is not None:
        with open(quarantine_path, "w", encoding="utf-8") as fh:
            for q in quarantined:
                fh.write(json.dumps(q.to_json()) + "\n")
    return records, quarantined


def _grounded_atoms(f: Formula):
    from .core import Atom, walk

    return [a for a in walk(f) if isinstance(a, Atom) and not a.is_placeholder]


def _replace_spans(sentence: str, ap_map: ApMap) -> str:
    out = []
    cursor = 0
    for e in sorted((e for e in ap_map.entries if e.start >= 0), key=lambda e: e.start):
        out.append(sentence[cursor : e.start])
        out.append(f"(prop_{e.index})")
        cursor = e.end
    out.append(sentence[cursor:])
    return "".join(out)
