import json

from stlkit.cli import main
from stlkit.pipeline import DatasetStore
from stlkit.syntax import IN_WORD, parse


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSynth:
    def test_deterministic_line(self, capsys):
        code, out1, _ = run(capsys, "synth", "--n", "1", "--max-aps", "3", "--seed", "7", "--format", "preorder-symbol")
        code2, out2, _ = run(capsys, "synth", "--n", "1", "--max-aps", "3", "--seed", "7", "--format", "preorder-symbol")
        assert code == code2 == 0
        assert out1 == out2
        assert out1.strip()

    def test_json_mode_emits_all_renderings(self, capsys):
        code, out, _ = run(capsys, "synth", "--n", "2", "--seed", "1", "--json")
        assert code == 0
        rows = [json.loads(l) for l in out.strip().splitlines()]
        assert len(rows) == 2
        assert set(rows[0]) == {
            "preorder_symbol",
            "preorder_word",
            "inorder_symbol",
            "inorder_word",
        }

    def test_output_parses_under_requested_format(self, capsys):
        _, out, _ = run(capsys, "synth", "--n", "5", "--seed", "3", "--format", "inorder-word")
        for line in out.strip().splitlines():
            parse(line, IN_WORD)


class TestConvert:
    def test_published_row1(self, capsys, annotation_examples):
        row = annotation_examples[0]
        code, out, _ = run(
            capsys,
            "convert",
            "--from", "preorder-symbol",
            "--to", "inorder-word",
            "--text", row["preorder_symbol"],
        )
        assert code == 0
        assert out.strip() == row["inorder_word"]

    def test_stream_of_json_rows(self, capsys, tmp_path):
        src = tmp_path / "in.jsonl"
        src.write_text('{"stl": "& prop_1 prop_2", "keep": 1}\n')
        code, out, _ = run(
            capsys, "convert", "--from", "preorder-symbol", "--to", "inorder-word", "--in", str(src)
        )
        assert code == 0
        row = json.loads(out)
        assert row == {"stl": "(prop_1 and prop_2)", "keep": 1}

    def test_bad_formula_exit_code(self, capsys):
        code, _, err = run(
            capsys, "convert", "--from", "inorder-word", "--to", "preorder-word", "--text", "( prop_1 and"
        )
        assert code == 3
        assert err

    def test_json_errors_flag(self, capsys):
        code, _, err = run(
            capsys,
            "--json-errors",
            "convert",
            "--from", "inorder-word",
            "--to", "preorder-word",
            "--text", "( prop_1 and",
        )
        assert code == 3
        payload = json.loads(err)
        assert set(payload) == {"error", "message"}


class TestUsageAndIo:
    def test_unknown_subcommand_is_usage_error(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 1

    def test_missing_file_is_io_error(self, capsys):
        code, _, _ = run(capsys, "stats", "--in", "/nonexistent/ds.jsonl")
        assert code == 2


class TestGenStatsEval:
    def test_gen_framework2_then_stats_then_eval(self, capsys, tmp_path):
        ds = tmp_path / "ds.jsonl"
        manifest_path = tmp_path / "manifest.json"
        code, _, err = run(
            capsys,
            "gen",
            "--framework", "2",
            "--n", "8",
            "--backend", "mock",
            "--seed", "5",
            "--out", str(ds),
            "--manifest", str(manifest_path),
        )
        assert code == 0
        manifest = json.loads(manifest_path.read_text())
        counts = manifest["counts"]
        assert counts["requested"] == 8
        assert counts["requested"] == sum(
            counts[k] for k in ("produced", "parse_failed", "sanity_rejected", "deduped", "backend_failed")
        )

        code, out, _ = run(capsys, "stats", "--in", str(ds))
        assert code == 0
        stats = json.loads(out)
        assert stats["sentences"] == counts["produced"]

        store = DatasetStore(ds)
        gold = tmp_path / "gold.txt"
        gold.write_text(
            "\n".join(r.lifted_stl[IN_WORD.key] for r in store.records()) + "\n"
        )
        code, out, _ = run(
            capsys, "eval", "--pred", str(gold), "--gold", str(gold), "--format", "inorder-word"
        )
        assert code == 0
        report = json.loads(out)
        assert report["accuracy"] == 1.0

    def test_gen_framework1(self, capsys, tmp_path):
        ds = tmp_path / "f1.jsonl"
        code, _, _ = run(
            capsys, "gen", "--framework", "1", "--n", "3", "--backend", "mock", "--out", str(ds)
        )
        assert code == 0
        records = DatasetStore(ds).records()
        assert len(records) == 3
        assert all(r.provenance == "framework1" for r in records)


class TestLiftGround:
    def test_lift_then_ground_stream(self, capsys, tmp_path, domain_rows):
        from stlkit.cli import _data_path

        rows = [r for r in domain_rows if r["domain"] == "navigation"]
        src = tmp_path / "full.jsonl"
        src.write_text("\n".join(json.dumps({"nl": r["nl"], "stl": r["stl"]}) for r in rows) + "\n")
        lifted_path = tmp_path / "lifted.jsonl"
        code, out, _ = run(
            capsys,
            "lift",
            "--dict", str(_data_path("dicts/navigation.txt")),
            "--convention", "navigation_verb_noun",
            "--in", str(src),
            "--out", str(lifted_path),
        )
        assert code == 0
        lifted_rows = [json.loads(l) for l in lifted_path.read_text().splitlines()]
        assert len(lifted_rows) == len(rows)
        assert all("lifted_nl" in r for r in lifted_rows)

        code, out, _ = run(capsys, "ground", "--in", str(lifted_path))
        assert code == 0
        grounded = [json.loads(l) for l in out.strip().splitlines()]
        assert [g["nl"] for g in grounded] == [r["nl"] for r in rows]


class TestIngestCommand:
    def test_ingest_writes_store_and_quarantine(self, capsys, tmp_path, domain_rows):
        from stlkit.cli import _data_path

        rows = [r for r in domain_rows if r["domain"] == "office_email"]
        src = tmp_path / "office.jsonl"
        src.write_text("\n".join(json.dumps({"nl": r["nl"], "stl": r["stl"]}) for r in rows) + "\n")
        out_path = tmp_path / "ds.jsonl"
        qpath = tmp_path / "q.jsonl"
        code, _, err = run(
            capsys,
            "ingest",
            "--domain", "office_email",
            "--dict", str(_data_path("dicts/office_email.txt")),
            "--in", str(src),
            "--out", str(out_path),
            "--quarantine", str(qpath),
        )
        assert code == 0
        assert len(DatasetStore(out_path).records()) == len(rows)
        assert qpath.read_text() == ""


class TestBackendFailureExitCode:
    def test_pool_too_small_exits_4(self, capsys, tmp_path):
        pool_path = tmp_path / "tiny_pool.jsonl"
        pool_path.write_text('{"nl": "only one (prop_1) .", "stl": "finally prop_1"}\n')
        code, _, err = run(
            capsys,
            "gen",
            "--framework", "1",
            "--n", "1",
            "--backend", "mock",
            "--pool", str(pool_path),
            "--out", str(tmp_path / "ds.jsonl"),
        )
        assert code == 4
        assert "pool" in err.lower()

    def test_per_record_backend_failures_do_not_abort(self, capsys, tmp_path):
        # transport-level failures are counted in the manifest, not fatal
        ds = tmp_path / "ds.jsonl"
        manifest_path = tmp_path / "m.json"
        code, _, _ = run(
            capsys,
            "gen",
            "--framework", "1",
            "--n", "2",
            "--backend", "mock",
            "--out", str(ds),
            "--manifest", str(manifest_path),
        )
        assert code == 0
        counts = json.loads(manifest_path.read_text())["counts"]
        assert counts["produced"] + counts["backend_failed"] >= 2 - counts["deduped"]
