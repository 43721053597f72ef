#!/usr/bin/env python3
"""Offline end-to-end demo: generate a small dataset with the mock backend,
print corpus statistics, and sanity-score the dataset against itself."""

import argparse
import json
import tempfile
from pathlib import Path

from stlkit.cli import default_pool
from stlkit.evaluate import corpus_stats, evaluate
from stlkit.gateway import MockBackend, PromptSpec, Task
from stlkit.pipeline import DatasetStore, run_framework1, run_framework2
from stlkit.synthesis import SynthConfig
from stlkit.syntax import IN_WORD


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=25)
    parser.add_argument("--max-aps", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="dataset path (default: temp file)")
    args = parser.parse_args()

    out = Path(args.out) if args.out else Path(tempfile.mkdtemp()) / "demo_dataset.jsonl"
    pool = default_pool()
    spec = PromptSpec(task=Task.STL_TO_NL, k=20, fmt=IN_WORD, seed=args.seed)
    synth = SynthConfig(max_aps=args.max_aps, seed=args.seed)

    store = DatasetStore(out)
    for runner in (run_framework1, run_framework2):
        records, manifest = runner(args.n, synth, spec, MockBackend(), pool)
        store.append_all(records)
        print(f"{manifest.framework}: {json.dumps(manifest.to_json()['counts'])}")

    records = store.records()
    print()
    print(corpus_stats(records).to_table())

    gold = [r.lifted_stl[IN_WORD.key] for r in records]
    report = evaluate(zip(gold, gold), IN_WORD)
    print()
    print(f"self-accuracy {report.accuracy:.2%} over {report.total} records")
    print(f"dataset written to {out}")


if __name__ == "__main__":
    main()
