import itertools
import json

import pytest

from stlkit.cli import _data_path, default_pool
from stlkit.core import tree_equal
from stlkit.gateway import MockBackend, PromptSpec, Task, TransportError
from stlkit.lifting import DictionaryRecognizer, load_conventions
from stlkit.pipeline import (
    DatasetRecord,
    DatasetStore,
    SchemaMismatch,
    SelfReview,
    UnknownRecord,
    VersionConflict,
    WrongStatus,
    dedup,
    ingest_full_pairs,
    renderings,
    run_framework1,
    run_framework2,
)
from stlkit.synthesis import SynthConfig
from stlkit.syntax import ALL_FORMATS, IN_WORD, parse

ANNOTATED_ROW1 = (
    "If (prop_2) implies (prop_3), then (prop_1) will happen at some point "
    "during the next 55 to 273 time units, and vice versa ."
)


@pytest.fixture()
def pool():
    return default_pool()


@pytest.fixture()
def spec():
    return PromptSpec(task=Task.STL_TO_NL, k=20, fmt=IN_WORD, seed=0)


def _mk_record(i=0, status="raw", **kwargs):
    f = parse(f"(prop_1 until[{10 + i},90] prop_2)", IN_WORD)
    defaults = dict(
        id=f"rec-{i:03d}",
        domain="synthesized",
        lifted_nl=f"(prop_1) holds until thing {i} happens (prop_2) .",
        lifted_stl=renderings(f),
        provenance="manual",
        status=status,
    )
    defaults.update(kwargs)
    return DatasetRecord(**defaults)


class TestFramework1:
    def test_three_raw_records(self, pool, spec):
        records, manifest = run_framework1(3, SynthConfig(max_aps=4, seed=1), spec, MockBackend(), pool)
        assert len(records) == 3
        assert all(r.status == "raw" and r.provenance == "framework1" for r in records)
        assert manifest.produced == 3
        assert manifest.reconciles()

    def test_renderings_mutually_tree_equal(self, pool, spec):
        records, _ = run_framework1(5, SynthConfig(max_aps=5, seed=2), spec, MockBackend(), pool)
        for record in records:
            parsed = [
                parse(record.lifted_stl[fmt.key], fmt) for fmt in ALL_FORMATS
            ]
            assert all(tree_equal(parsed[0], other) for other in parsed[1:])

    def test_backend_failures_counted(self, pool, spec):
        backend = MockBackend()
        backend.fail_next(*[TransportError("boom")] * 12)  # exhausts retries for one slot
        records, manifest = run_framework1(
            4, SynthConfig(max_aps=3, seed=3), spec, backend, pool
        )
        assert manifest.backend_failed >= 1
        assert manifest.reconciles()
        assert len(records) == manifest.produced

    def test_deterministic_ids(self, pool, spec):
        a, _ = run_framework1(2, SynthConfig(max_aps=3, seed=9), spec, MockBackend(), pool)
        b, _ = run_framework1(2, SynthConfig(max_aps=3, seed=9), spec, MockBackend(), pool)
        assert [r.id for r in a] == [r.id for r in b]
        assert [r.lifted_nl for r in a] == [r.lifted_nl for r in b]


class TestFramework2:
    def test_echo_loop_full_agreement(self, pool, spec):
        records, manifest = run_framework2(
            10, SynthConfig(max_aps=5, seed=4), spec, MockBackend(), pool
        )
        assert manifest.reconciles()
        assert all(r.metadata["high_agreement"] for r in records)
        assert all(r.provenance == "framework2" for r in records)

    def test_unparseable_backtranslation_dropped(self, pool, spec):
        class GarbageBack(MockBackend):
            def _fallback(self, request):
                if request.task is Task.NL_TO_STL:
                    return "( ( ) never parses"
                return super()._fallback(request)

        records, manifest = run_framework2(
            6, SynthConfig(max_aps=4, seed=5), spec, GarbageBack(), pool
        )
        assert records == []
        assert manifest.parse_failed == 6
        assert manifest.reconciles()

    def test_counts_reconcile_arithmetic(self, pool, spec):
        _, manifest = run_framework2(
            10, SynthConfig(max_aps=5, seed=6), spec, MockBackend(), pool
        )
        counted = (
            manifest.produced
            + manifest.parse_failed
            + manifest.sanity_rejected
            + manifest.deduped
            + manifest.backend_failed
        )
        assert counted == manifest.requested == 10


class TestIngest:
    def test_gltl_row_quarantined_under_sane_dictionary(self, tmp_path, domain_rows):
        # the published GLTL row pairs a blue/orange sentence with a red/blue
        # formula; an honest dictionary cannot cover the formula payloads
        row = next(r for r in domain_rows if r["domain"] == "gltl")
        src = tmp_path / "rows.jsonl"
        src.write_text(json.dumps({"nl": row["nl"], "stl": row["stl"], "format": row["format"]}) + "\n")
        recognizer = DictionaryRecognizer.from_file(_data_path("dicts/gltl.txt"))
        records, quarantined = ingest_full_pairs(src, "gltl", recognizer)
        assert records == []
        assert len(quarantined) == 1
        assert "UnmappedAtom" in quarantined[0].reason

    def test_navigation_rows_ingest_cleanly(self, tmp_path, domain_rows):
        rows = [r for r in domain_rows if r["domain"] == "navigation"]
        src = tmp_path / "nav.jsonl"
        src.write_text(
            "\n".join(json.dumps({"nl": r["nl"], "stl": r["stl"]}) for r in rows) + "\n"
        )
        conventions = load_conventions(_data_path("conventions.json"))
        recognizer = DictionaryRecognizer.from_file(
            _data_path("dicts/navigation.txt"), conventions["navigation_verb_noun"]
        )
        records, quarantined = ingest_full_pairs(src, "navigation", recognizer)
        assert quarantined == []
        assert len(records) == len(rows)
        for record, row in zip(records, rows):
            assert record.ap_map is not None
            assert len(record.ap_map.entries) == len(row["aps"])
            assert "(prop_1)" in record.lifted_nl

    def test_office_rows_ingest_cleanly(self, tmp_path, domain_rows):
        rows = [r for r in domain_rows if r["domain"] == "office_email"]
        src = tmp_path / "office.jsonl"
        src.write_text("\n".join(json.dumps({"nl": r["nl"], "stl": r["stl"]}) for r in rows) + "\n")
        recognizer = DictionaryRecognizer.from_file(_data_path("dicts/office_email.txt"))
        records, quarantined = ingest_full_pairs(src, "office_email", recognizer)
        assert quarantined == []
        assert len(records) == len(rows)

    def test_empty_file(self, tmp_path):
        src = tmp_path / "empty.jsonl"
        src.write_text("")
        recognizer = DictionaryRecognizer({})
        records, quarantined = ingest_full_pairs(src, "none", recognizer)
        assert records == [] and quarantined == []

    def test_schema_mismatch(self, tmp_path):
        src = tmp_path / "bad.jsonl"
        src.write_text('{"only_nl": "hello"}\n')
        with pytest.raises(SchemaMismatch):
            ingest_full_pairs(src, "x", DictionaryRecognizer({}))

    def test_quarantine_file_schema(self, tmp_path, domain_rows):
        row = next(r for r in domain_rows if r["domain"] == "gltl")
        src = tmp_path / "rows.jsonl"
        src.write_text(json.dumps({"nl": row["nl"], "stl": row["stl"]}) + "\n")
        qpath = tmp_path / "quarantine.jsonl"
        ingest_full_pairs(
            src, "gltl", DictionaryRecognizer({}), quarantine_path=qpath
        )
        logged = [json.loads(l) for l in qpath.read_text().splitlines()]
        assert logged and set(logged[0]) == {"row", "reason"}


class TestDedup:
    def test_byte_identical_consolidated(self):
        a, b = _mk_record(1), _mk_record(1, id="rec-dup")
        assert [r.id for r in dedup([a, b])] == ["rec-001"]

    def test_same_stl_different_nl_both_survive(self):
        a = _mk_record(1)
        b = _mk_record(1, id="rec-002", lifted_nl="a different sentence (prop_1) (prop_2) .")
        assert len(dedup([a, b])) == 2

    def test_case_and_whitespace_variants_deduped(self):
        a = _mk_record(1)
        b = _mk_record(
            1,
            id="rec-002",
            lifted_nl=a.lifted_nl.upper().replace(" ", "  "),
        )
        assert [r.id for r in dedup([a, b])] == ["rec-001"]


class TestStore:
    def test_round_trip_lossless(self, tmp_path):
        path = tmp_path / "ds.jsonl"
        store = DatasetStore(path)
        record = _mk_record(0)
        store.append(record)
        store.submit_annotation("rec-000", ANNOTATED_ROW1, "alice", 1)
        reloaded = DatasetStore(path)
        got = reloaded.get("rec-000")
        assert got.lifted_nl == ANNOTATED_ROW1
        assert got.version == 2
        assert got.history[0]["nl"] == record.lifted_nl
        assert got.to_json() == store.get("rec-000").to_json()

    def test_annotation_flow_to_crosschecked(self, tmp_path):
        store = DatasetStore(tmp_path / "ds.jsonl")
        store.append(_mk_record(0))
        annotated = store.submit_annotation("rec-000", ANNOTATED_ROW1, "alice", 1)
        assert annotated.status == "annotated"
        checked = store.crosscheck("rec-000", "bob", "accept", annotated.version)
        assert checked.status == "crosschecked"
        assert checked.reviewer == "bob"

    def test_crosscheck_reject(self, tmp_path):
        store = DatasetStore(tmp_path / "ds.jsonl")
        store.append(_mk_record(0))
        store.submit_annotation("rec-000", "fixed .", "alice", 1)
        rejected = store.crosscheck("rec-000", "bob", "reject", 2)
        assert rejected.status == "rejected"

    def test_wrong_status_transitions_blocked(self, tmp_path):
        store = DatasetStore(tmp_path / "ds.jsonl")
        store.append(_mk_record(0))
        with pytest.raises(WrongStatus):
            store.crosscheck("rec-000", "bob", "accept", 1)  # still raw
        store.submit_annotation("rec-000", "fixed .", "alice", 1)
        store.crosscheck("rec-000", "bob", "accept", 2)
        with pytest.raises(WrongStatus):
            store.submit_annotation("rec-000", "again .", "carol", 3)

    def test_self_review_blocked(self, tmp_path):
        store = DatasetStore(tmp_path / "ds.jsonl")
        store.append(_mk_record(0))
        store.submit_annotation("rec-000", "fixed .", "alice", 1)
        with pytest.raises(SelfReview):
            store.crosscheck("rec-000", "alice", "accept", 2)

    def test_stale_version_conflict(self, tmp_path):
        store = DatasetStore(tmp_path / "ds.jsonl")
        store.append(_mk_record(0))
        store.submit_annotation("rec-000", "fixed .", "alice", 1)
        with pytest.raises(VersionConflict):
            store.submit_annotation("rec-000", "race .", "bob", 1)

    def test_unknown_record(self, tmp_path):
        store = DatasetStore(tmp_path / "ds.jsonl")
        with pytest.raises(UnknownRecord):
            store.get("nope")

    def test_status_machine_exhaustive(self, tmp_path):
        # every (status, action) pair outside the diagram is rejected
        allowed = {("raw", "annotate"), ("annotated", "accept"), ("annotated", "reject")}
        actions = ("annotate", "accept", "reject")
        for i, (status, action) in enumerate(
            itertools.product(("raw", "annotated", "crosschecked", "rejected"), actions)
        ):
            store = DatasetStore(tmp_path / f"m{i}.jsonl")
            store.append(_mk_record(i, status=status, annotator="alice" if status != "raw" else None))
            def attempt():
                if action == "annotate":
                    store.submit_annotation(f"rec-{i:03d}", "new .", "dana", 1)
                else:
                    store.crosscheck(f"rec-{i:03d}", "erin", action, 1)
            if (status, action) in allowed:
                attempt()
            else:
                with pytest.raises(WrongStatus):
                    attempt()

    def test_assign_reviewer_excludes_annotator(self, tmp_path):
        store = DatasetStore(tmp_path / "ds.jsonl")
        store.append(_mk_record(0, status="annotated", annotator="alice"))
        for seed in range(10):
            assert store.assign_reviewer("rec-000", ["alice", "bob", "carol"], seed) != "alice"


class TestParallelGeneration:
    def test_bounded_parallel_matches_sequential(self, pool, spec):
        from stlkit.gateway import MockBackend

        sequential, _ = run_framework2(
            12, SynthConfig(max_aps=5, seed=21), spec, MockBackend(), pool
        )
        parallel, manifest = run_framework2(
            12,
            SynthConfig(max_aps=5, seed=21),
            spec,
            MockBackend(),
            pool,
            max_workers=4,
        )
        assert [r.id for r in parallel] == [r.id for r in sequential]
        assert [r.lifted_stl for r in parallel] == [r.lifted_stl for r in sequential]
        assert manifest.reconciles()
