"""Command-line entry point.

Subcommands are thin adapters over the library: synth, convert, lift,
ground, gen, ingest, eval, stats, serve.  Streams are JSONL in/out so
subcommands compose through pipes; single-formula conveniences accept
bare text.  Exit codes: 1 usage, 2 I/O, 3 parse/validation, 4 backend.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import evaluate as ev
from . import pipeline as pl
from .core import InvalidFormula
from .gateway import (
    BackendConfig,
    ExamplePool,
    GatewayError,
    HttpBackend,
    MockBackend,
    PromptSpec,
    Task,
    load_canned_fixtures,
)
from .lifting import (
    ApMap,
    Convention,
    DictionaryRecognizer,
    IDENTITY_SNAKE,
    LiftedPair,
    LiftingError,
    ground,
    load_conventions,
)
from .synthesis import ConfigInvalid, SynthConfig, synthesize_batch
from .syntax import FormatSpec, IN_WORD, ParseError, Unrepairable, linearize, parse

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_PARSE = 3
EXIT_BACKEND = 4


class _UsageExit(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageExit(message)


def _data_path(name: str) -> Path:
    return Path(str(resources.files("stlkit").joinpath("data", name)))


def default_pool() -> ExamplePool:
    return ExamplePool.from_jsonl(_data_path("prompt_pool.jsonl"), source="bundled")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_lines(path: str | None):
    if path:
        return Path(path).read_text(encoding="utf-8").splitlines()
    return [line.rstrip("\n") for line in sys.stdin]


def _fmt(value: str) -> FormatSpec:
    return FormatSpec.from_id(value)


def _build_parser() -> _Parser:
    parser = _Parser(prog="stlkit", description=__doc__)
    parser.add_argument("--json-errors", action="store_true", help="emit machine-readable errors on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="emit random formulas")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--max-aps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", default=IN_WORD.id)
    p.add_argument("--p-untimed", type=float, default=0.5)
    p.add_argument("--p-infinite", type=float, default=0.2)
    p.add_argument("--json", action="store_true", help="JSONL with all four renderings")
    p.add_argument("--out")

    p = sub.add_parser("convert", help="convert formulas between formats")
    p.add_argument("--from", dest="from_fmt", required=True)
    p.add_argument("--to", dest="to_fmt", required=True)
    p.add_argument("--text", help="single formula instead of a stream")
    p.add_argument("--in", dest="infile")
    p.add_argument("--out")

    p = sub.add_parser("lift", help="lift full NL/STL rows to placeholder form")
    p.add_argument("--dict", dest="dict_path", required=True)
    p.add_argument("--convention")
    p.add_argument("--format", default=IN_WORD.id)
    p.add_argument("--in", dest="infile")
    p.add_argument("--out")

    p = sub.add_parser("ground", help="swap placeholders back to AP payloads")
    p.add_argument("--in", dest="infile")
    p.add_argument("--format", default=IN_WORD.id)
    p.add_argument("--out")

    p = sub.add_parser("gen", help="run a dataset generation framework")
    p.add_argument("--framework", type=int, choices=(1, 2), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--backend", choices=("live", "mock"), default="mock")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-aps", type=int, default=5)
    p.add_argument("--prompt-k", type=int, default=20)
    p.add_argument("--domain", default="synthesized")
    p.add_argument("--pool", help="JSONL prompt pool (defaults to the bundled pool)")
    p.add_argument("--mock-fixtures", help="JSONL canned completions for the mock backend")
    p.add_argument("--endpoint", default="")
    p.add_argument("--model", default="")
    p.add_argument("--credential-env", default="STLKIT_API_KEY")
    p.add_argument("--concurrency", type=int, default=1)
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")

    p = sub.add_parser("ingest", help="ingest an external full-pair corpus")
    p.add_argument("--domain", required=True)
    p.add_argument("--dict", dest="dict_path", required=True)
    p.add_argument("--convention")
    p.add_argument("--format", default=IN_WORD.id)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--quarantine")

    p = sub.add_parser("eval", help="binary accuracy of predictions vs gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--format", default=IN_WORD.id)
    p.add_argument("--table", action="store_true")
    p.add_argument("--csv", help="write per-AP-count buckets to this CSV file")
    p.add_argument("--out")

    p = sub.add_parser("stats", help="corpus statistics of a dataset file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", default=IN_WORD.id)
    p.add_argument("--table", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("serve", help="annotation HTTP API (and optional UI)")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--dataset", required=True)
    p.add_argument("--ui-dir")
    p.add_argument("--verbose", action="store_true")
    return parser


def _load_convention(args) -> Convention:
    if not args.convention:
        return IDENTITY_SNAKE
    conventions = load_conventions(_data_path("conventions.json"))
    if args.convention in conventions:
        return conventions[args.convention]
    return Convention.from_config(json.loads(Path(args.convention).read_text(encoding="utf-8")))


def _cmd_synth(args) -> int:
    config = SynthConfig(
        max_aps=args.max_aps,
        seed=args.seed,
        p_untimed=args.p_untimed,
        p_infinite=args.p_infinite,
    )
    formulas, _ = synthesize_batch(config, args.n)
    if args.json:
        lines = [json.dumps(pl.renderings(f)) for f in formulas]
    else:
        fmt = _fmt(args.format)
        lines = [linearize(f, fmt) for f in formulas]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_convert(args) -> int:
    src, dst = _fmt(args.from_fmt), _fmt(args.to_fmt)
    if args.text is not None:
        _emit(linearize(parse(args.text, src), dst) + "\n", args.out)
        return 0
    out_lines = []
    for line in _read_lines(args.infile):
        if not line.strip():
            continue
        if line.lstrip().startswith("{"):
            row = json.loads(line)
            row["stl"] = linearize(parse(row["stl"], src), dst)
            out_lines.append(json.dumps(row))
        else:
            out_lines.append(linearize(parse(line, src), dst))
    _emit("\n".join(out_lines) + "\n", args.out)
    return 0


def _cmd_lift(args) -> int:
    recognizer = DictionaryRecognizer.from_file(args.dict_path, _load_convention(args))
    records, quarantined = pl.ingest_full_pairs(
        args.infile or "/dev/stdin",
        domain="stream",
        recognizer=recognizer,
        default_format=_fmt(args.format),
    )
    lines = [
        json.dumps(
            {
                "lifted_nl": r.lifted_nl,
                "lifted_stl": r.lifted_stl,
                "ap_map": r.ap_map.to_json() if r.ap_map else [],
            }
        )
        for r in records
    ]
    lines += [json.dumps({"quarantined": q.to_json()}) for q in quarantined]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_ground(args) -> int:
    fmt = _fmt(args.format)
    out_lines = []
    for line in _read_lines(args.infile):
        if not line.strip():
            continue
        row = json.loads(line)
        stl_text = row["lifted_stl"]
        if isinstance(stl_text, dict):
            stl_text = stl_text[fmt.key]
        pair = LiftedPair(nl=row["lifted_nl"], stl=parse(stl_text, fmt))
        full = ground(pair, ApMap.from_json(row["ap_map"]))
        out_lines.append(json.dumps({"nl": full.nl, "stl": linearize(full.stl, fmt)}))
    _emit("\n".join(out_lines) + "\n", args.out)
    return 0


def _make_backend(args):
    if args.backend == "mock":
        canned = load_canned_fixtures(args.mock_fixtures) if args.mock_fixtures else None
        return MockBackend(canned=canned)
    if not args.endpoint or not args.model:
        raise _UsageExit("--backend live requires --endpoint and --model")
    return HttpBackend(
        BackendConfig(
            endpoint=args.endpoint,
            model=args.model,
            credential_env=args.credential_env,
            max_in_flight=max(1, args.concurrency),
        )
    )


def _cmd_gen(args) -> int:
    pool = ExamplePool.from_jsonl(args.pool) if args.pool else default_pool()
    backend = _make_backend(args)
    synth_config = SynthConfig(max_aps=args.max_aps, seed=args.seed)
    prompt_spec = PromptSpec(task=Task.STL_TO_NL, k=args.prompt_k, fmt=IN_WORD, seed=args.seed)
    runner = pl.run_framework1 if args.framework == 1 else pl.run_framework2
    records, manifest = runner(
        args.n,
        synth_config,
        prompt_spec,
        backend,
        pool,
        domain=args.domain,
        dedup_records=not args.no_dedup,
        max_workers=max(1, args.concurrency),
    )
    store = pl.DatasetStore(args.out)
    store.append_all(records)
    if args.manifest:
        Path(args.manifest).write_text(
            json.dumps(manifest.to_json(), indent=2) + "\n", encoding="utf-8"
        )
    sys.stderr.write(
        f"produced {manifest.produced}/{manifest.requested} records -> {args.out}\n"
    )
    return 0


def _cmd_ingest(args) -> int:
    recognizer = DictionaryRecognizer.from_file(args.dict_path, _load_convention(args))
    records, quarantined = pl.ingest_full_pairs(
        args.infile,
        domain=args.domain,
        recognizer=recognizer,
        default_format=_fmt(args.format),
        quarantine_path=args.quarantine,
    )
    store = pl.DatasetStore(args.out)
    store.append_all(records)
    sys.stderr.write(f"ingested {len(records)} rows, quarantined {len(quarantined)}\n")
    return 0


def _cmd_eval(args) -> int:
    pred_lines = [l for l in Path(args.pred).read_text(encoding="utf-8").splitlines() if l.strip()]
    gold_lines = [l for l in Path(args.gold).read_text(encoding="utf-8").splitlines() if l.strip()]
    if len(pred_lines) != len(gold_lines):
        raise ParseError(
            f"pred has {len(pred_lines)} lines but gold has {len(gold_lines)}", 0
        )
    report = ev.evaluate(zip(pred_lines, gold_lines), _fmt(args.format))
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    text = report.to_table() if args.table else json.dumps(report.to_json(), indent=2)
    _emit(text + "\n", args.out)
    return 0


def _cmd_stats(args) -> int:
    pairs = list(ev.iter_dataset_pairs(args.infile, _fmt(args.format)))
    stats = ev.corpus_stats(pairs)
    text = stats.to_table() if args.table else json.dumps(stats.to_json(), indent=2)
    _emit(text + "\n", args.out)
    return 0


def _cmd_serve(args) -> int:
    from .server import make_server

    store = pl.DatasetStore(args.dataset)
    server = make_server(store, port=args.port, ui_dir=args.ui_dir, verbose=args.verbose)
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "convert": _cmd_convert,
    "lift": _cmd_lift,
    "ground": _cmd_ground,
    "gen": _cmd_gen,
    "ingest": _cmd_ingest,
    "eval": _cmd_eval,
    "stats": _cmd_stats,
    "serve": _cmd_serve,
}


def _fail(args_json: bool, code: int, kind: str, message: str) -> int:
    if args_json:
        sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    else:
        sys.stderr.write(f"stlkit: {kind}: {message}\n")
    return code


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    json_errors = "--json-errors" in (argv if argv is not None else sys.argv[1:])
    try:
        args = parser.parse_args(argv)
    except _UsageExit as exc:
        return _fail(json_errors, EXIT_USAGE, "usage", str(exc))
    try:
        return _COMMANDS[args.command](args)
    except _UsageExit as exc:
        return _fail(args.json_errors, EXIT_USAGE, "usage", str(exc))
    except (FileNotFoundError, PermissionError, IsADirectoryError, pl.FileUnreadable) as exc:
        return _fail(args.json_errors, EXIT_IO, "io", str(exc))
    except (
        ParseError,
        Unrepairable,
        InvalidFormula,
        ConfigInvalid,
        LiftingError,
        pl.SchemaMismatch,
        ev.GoldUnparseable,
        ev.EmptyInput,
        ValueError,
    ) as exc:
        return _fail(args.json_errors, EXIT_PARSE, "parse", str(exc))
    except GatewayError as exc:
        return _fail(args.json_errors, EXIT_BACKEND, "backend", str(exc))


if __name__ == "__main__":
    sys.exit(main())
