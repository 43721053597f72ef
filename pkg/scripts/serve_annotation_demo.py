#!/usr/bin/env python3
"""Seed a small raw dataset and serve the annotation API (plus the UI when
frontend/dist has been built)."""

import argparse
from pathlib import Path

from stlkit.cli import default_pool
from stlkit.gateway import MockBackend, PromptSpec, Task
from stlkit.pipeline import DatasetStore, run_framework2
from stlkit.server import make_server
from stlkit.synthesis import SynthConfig
from stlkit.syntax import IN_WORD


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=12)
    parser.add_argument("--port", type=int, default=8765)
    parser.add_argument("--dataset", default="annotation_demo.jsonl")
    args = parser.parse_args()

    path = Path(args.dataset)
    store = DatasetStore(path)
    if not store.records():
        records, _ = run_framework2(
            args.n,
            SynthConfig(max_aps=5, seed=1),
            PromptSpec(task=Task.STL_TO_NL, k=20, fmt=IN_WORD, seed=1),
            MockBackend(),
            default_pool(),
        )
        store.append_all(records)
        print(f"seeded {len(records)} raw records into {path}")

    ui_dist = Path(__file__).resolve().parent.parent / "frontend" / "dist"
    server = make_server(
        store, port=args.port, ui_dir=ui_dist if ui_dist.is_dir() else None, verbose=True
    )
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
